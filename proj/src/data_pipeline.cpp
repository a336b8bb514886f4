#include "hamlearn/data_pipeline.hpp"

#include <cmath>
#include <cstring>
#include <optional>

#include <Eigen/Dense>

#include "hamlearn/errors.hpp"
#include "hamlearn/parallel.hpp"
#include "hamlearn/poly_basis.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

void BurstPlan::validate() const {
  if (trajectories < 1) throw ArgumentError("burst plan: trajectories must be >= 1");
  if (steps_per_burst < 1) throw ArgumentError("burst plan: steps_per_burst must be >= 1");
  if (fine_ratio < 1) throw ArgumentError("burst plan: fine_ratio must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("burst plan: dt must be positive");
}

std::vector<StateVector> sample_initial_states(const BurstPlan& plan, const DomainBox& box) {
  plan.validate();
  CounterRng rng = CounterRng(plan.seed).split(streams::kInitialStates);
  std::vector<StateVector> out;
  out.reserve(plan.trajectories);
  std::vector<double> x(box.dims());
  for (std::size_t m = 0; m < plan.trajectories; ++m) {
    for (std::size_t i = 0; i < box.dims(); ++i) x[i] = rng.uniform(box.lower()[i], box.upper()[i]);
    out.emplace_back(x);
  }
  return out;
}

std::size_t BurstSet::exited_count() const {
  std::size_t n = 0;
  for (bool b : exited_box) n += b ? 1 : 0;
  return n;
}

BurstSet generate_bursts(const HamiltonianSystem& system, const BurstPlan& plan,
                         const DomainBox& box, unsigned threads) {
  const auto initial = sample_initial_states(plan, box);
  return generate_bursts_from(system, plan, initial, box, threads);
}

BurstSet generate_bursts_from(const HamiltonianSystem& system, const BurstPlan& plan,
                              std::span<const StateVector> initial, const DomainBox& box,
                              unsigned threads) {
  plan.validate();
  const std::size_t width = 2 * static_cast<std::size_t>(system.dim_d);
  if (box.dims() != width) throw ArgumentError("generate_bursts: box dimension mismatch");

  struct Slot {
    std::optional<Trajectory> traj;
    std::string error;
  };
  std::vector<Slot> slots(initial.size());
  const double substep = plan.dt / static_cast<double>(plan.fine_ratio);

  parallel_for(initial.size(), threads, [&](std::size_t m) {
    const StateVector& u0 = initial[m];
    if (u0.size() != width) {
      slots[m].error = "initial state dimension mismatch";
      return;
    }
    Trajectory traj;
    traj.times.reserve(plan.steps_per_burst + 1);
    traj.states.reserve(plan.steps_per_burst + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(u0);
    std::vector<double> x = u0.vec();
    Rk4Stepper stepper(width);
    try {
      std::size_t index = 0;
      for (std::size_t j = 1; j <= plan.steps_per_burst; ++j) {
        for (std::size_t s = 0; s < plan.fine_ratio; ++s, ++index)
          stepper.advance(system.rhs, x, substep, static_cast<double>(index) * substep, index);
        traj.times.push_back(static_cast<double>(j) * plan.dt);
        traj.states.emplace_back(x);
      }
    } catch (const IntegrationError& e) {
      slots[m].error = e.what();
      return;
    }
    slots[m].traj = std::move(traj);
  });

  BurstSet out;
  for (std::size_t m = 0; m < slots.size(); ++m) {
    if (!slots[m].traj) {
      out.dropped.push_back({m, slots[m].error});
      continue;
    }
    bool exited = false;
    for (const auto& st : slots[m].traj->states)
      if (!box.contains(st.values(), 1e-9)) {
        exited = true;
        break;
      }
    out.bursts.push_back(std::move(*slots[m].traj));
    out.source_index.push_back(m);
    out.exited_box.push_back(exited);
  }
  return out;
}

Trajectory add_noise(const Trajectory& traj, const NoiseSpec& spec, std::uint64_t seed) {
  if (!(spec.amplitude >= 0.0)) throw ArgumentError("noise amplitude must be >= 0");
  if (spec.amplitude == 0.0) return traj;
  CounterRng rng(seed);
  Trajectory out;
  out.times = traj.times;
  out.states.reserve(traj.size());
  std::vector<double> x;
  for (const auto& st : traj.states) {
    x = st.vec();
    for (double& v : x) v *= 1.0 + rng.uniform(-spec.amplitude, spec.amplitude);
    out.states.emplace_back(x);
  }
  return out;
}

namespace {

double uniform_spacing(const Trajectory& traj) {
  const std::size_t n = traj.size();
  const double dt = (traj.times.back() - traj.times.front()) / static_cast<double>(n - 1);
  if (!(dt > 0.0)) throw ArgumentError("trajectory times must be increasing");
  for (std::size_t j = 1; j < n; ++j) {
    const double h = traj.times[j] - traj.times[j - 1];
    if (std::abs(h - dt) > 1e-9 * dt)
      throw ArgumentError("central_diff: sample spacing is not uniform");
  }
  return dt;
}

}  // namespace

std::vector<std::vector<double>> central_diff(const Trajectory& traj) {
  const std::size_t n = traj.size();
  if (n < 3) throw ArgumentError("central_diff: needs at least three samples");
  const double dt = uniform_spacing(traj);
  const std::size_t w = traj.states.front().size();
  const double inv = 1.0 / (2.0 * dt);
  std::vector<std::vector<double>> out(n, std::vector<double>(w));
  const auto& s = traj.states;
  for (std::size_t i = 0; i < w; ++i) {
    out[0][i] = (-3.0 * s[0][i] + 4.0 * s[1][i] - s[2][i]) * inv;
    for (std::size_t j = 1; j + 1 < n; ++j) out[j][i] = (s[j + 1][i] - s[j - 1][i]) * inv;
    out[n - 1][i] = (3.0 * s[n - 1][i] - 4.0 * s[n - 2][i] + s[n - 3][i]) * inv;
  }
  return out;
}

DenoiseResult lsfit_denoise(const Trajectory& traj, const DenoiseConfig& cfg) {
  const std::size_t n = traj.size();
  if (cfg.degree < 1) throw ArgumentError("lsfit_denoise: degree must be >= 1");
  if (n < 2 || static_cast<std::size_t>(cfg.degree) > n - 1)
    throw ArgumentError("lsfit_denoise: degree exceeds samples - 1");
  const std::size_t w = traj.states.front().size();
  const int q = cfg.degree;

  const double t0 = traj.times.front(), t1 = traj.times.back();
  const double center = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
  if (!(half > 0.0)) throw ArgumentError("lsfit_denoise: duplicate sample times");

  Eigen::MatrixXd design(n, q + 1), slope(n, q + 1), y(n, w);
  std::vector<double> v(q + 1), d(q + 1);
  for (std::size_t j = 0; j < n; ++j) {
    legendre_table(q, (traj.times[j] - center) / half, v, d);
    for (int k = 0; k <= q; ++k) {
      design(j, k) = v[k];
      slope(j, k) = d[k] / half;
    }
    for (std::size_t i = 0; i < w; ++i) y(j, i) = traj.states[j][i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < q + 1) throw ArgumentError("lsfit_denoise: rank-deficient fit (duplicate times?)");
  const Eigen::MatrixXd coef = qr.solve(y);
  const Eigen::MatrixXd fitted = design * coef;
  const Eigen::MatrixXd rates = slope * coef;

  DenoiseResult out;
  out.filtered.times = traj.times;
  out.filtered.states.reserve(n);
  out.derivatives.assign(n, std::vector<double>(w));
  std::vector<double> x(w);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < w; ++i) {
      x[i] = cfg.apply_filter ? fitted(j, i) : traj.states[j][i];
      out.derivatives[j][i] = rates(j, i);
    }
    out.filtered.states.emplace_back(x);
  }
  return out;
}

std::string to_string(DerivativeMethodKind kind) {
  switch (kind) {
    case DerivativeMethodKind::kCentralDiff: return "central_diff";
    case DerivativeMethodKind::kLsFit: return "lsfit";
    case DerivativeMethodKind::kAnalytic: return "analytic";
  }
  return "central_diff";
}

DerivativeMethodKind derivative_method_from_string(const std::string& name) {
  if (name == "central_diff") return DerivativeMethodKind::kCentralDiff;
  if (name == "lsfit") return DerivativeMethodKind::kLsFit;
  if (name == "analytic") return DerivativeMethodKind::kAnalytic;
  throw ArgumentError("unknown derivative method '" + name + "'");
}

void DataPairSet::push_back(std::size_t trajectory_id, double time, std::span<const double> x,
                            std::span<const double> xdot) {
  if (dim_d == 0) dim_d = static_cast<int>(x.size() / 2);
  if (x.size() != width() || xdot.size() != width())
    throw ArgumentError("data pair dimension mismatch");
  states.insert(states.end(), x.begin(), x.end());
  derivatives.insert(derivatives.end(), xdot.begin(), xdot.end());
  trajectory_ids.push_back(trajectory_id);
  times.push_back(time);
}

void DataPairSet::validate() const {
  if (states.size() != derivatives.size() || trajectory_ids.size() != count() ||
      times.size() != count())
    throw ArgumentError("data pair set has inconsistent lengths");
  for (double v : states)
    if (!std::isfinite(v)) throw ArgumentError("data pair set has a non-finite state");
  for (double v : derivatives)
    if (!std::isfinite(v)) throw ArgumentError("data pair set has a non-finite derivative");
}

std::uint64_t DataPairSet::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::vector<double>& v) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
    for (std::size_t i = 0; i < v.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(states);
  mix(derivatives);
  return h;
}

DataPairSet assemble_pairs(std::span<const Trajectory> bursts, const DerivativeMethod& method,
                           const DomainBox& box, bool restrict_to_box,
                           const HamiltonianSystem* truth, unsigned threads) {
  if (bursts.empty()) throw EmptyDataError("assemble_pairs: no bursts");
  if (method.kind == DerivativeMethodKind::kAnalytic && truth == nullptr)
    throw ArgumentError("assemble_pairs: analytic derivatives need the truth system");

  struct Estimate {
    const Trajectory* states;
    Trajectory filtered;
    std::vector<std::vector<double>> derivs;
  };
  std::vector<Estimate> est(bursts.size());
  parallel_for(bursts.size(), threads, [&](std::size_t b) {
    const Trajectory& tr = bursts[b];
    est[b].states = &tr;
    switch (method.kind) {
      case DerivativeMethodKind::kCentralDiff:
        est[b].derivs = central_diff(tr);
        break;
      case DerivativeMethodKind::kLsFit: {
        auto r = lsfit_denoise(tr, method.denoise);
        est[b].filtered = std::move(r.filtered);
        est[b].states = &est[b].filtered;
        est[b].derivs = std::move(r.derivatives);
        break;
      }
      case DerivativeMethodKind::kAnalytic:
        est[b].derivs.reserve(tr.size());
        for (const auto& s : tr.states) est[b].derivs.push_back(truth->rhs_at(s.values()));
        break;
    }
  });

  DataPairSet out;
  out.dim_d = bursts.front().dim_d();
  if (box.dims() != out.width()) throw ArgumentError("assemble_pairs: box dimension mismatch");
  out.provenance.bursts = bursts.size();
  double tau = 0.0;
  std::vector<double> exact(out.width());
  for (std::size_t b = 0; b < bursts.size(); ++b) {
    const Trajectory& tr = *est[b].states;
    for (std::size_t j = 0; j < tr.size(); ++j) {
      const auto x = tr.states[j].values();
      const bool inside = box.contains(x, 1e-9);
      if (!inside) {
        ++out.provenance.pairs_outside_box;
        if (restrict_to_box) {
          ++out.provenance.pairs_dropped;
          continue;
        }
      }
      out.push_back(b, tr.times[j], x, est[b].derivs[j]);
      if (truth) {
        truth->rhs(x, exact);
        double e2 = 0.0;
        for (std::size_t i = 0; i < exact.size(); ++i) {
          const double diff = est[b].derivs[j][i] - exact[i];
          e2 += diff * diff;
        }
        tau = std::max(tau, std::sqrt(e2));
      }
    }
  }
  if (out.count() == 0) throw EmptyDataError("assemble_pairs: no pairs left after restriction");
  out.validate();
  if (truth) out.tau_bound = tau;
  return out;
}

}  // namespace hamlearn
