#include "hamlearn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "detail.hpp"
#include "hamlearn/errors.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/parallel.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

namespace {

void check_dims(const DataPairSet& pairs, const TotalDegreeBasis& basis) {
  if (pairs.count() == 0) throw EmptyDataError("no data pairs");
  if (pairs.width() != static_cast<std::size_t>(basis.dims()))
    throw ArgumentError("pair dimension " + std::to_string(pairs.width()) +
                        " does not match basis dimension " + std::to_string(basis.dims()));
}

}  // namespace

GradientLSProblem assemble(const DataPairSet& pairs, const TotalDegreeBasis& basis,
                           unsigned threads) {
  check_dims(pairs, basis);
  const std::size_t k_total = pairs.count();
  const std::size_t dims = pairs.width();
  const auto nv = static_cast<Eigen::Index>(basis.dim_v());

  GradientLSProblem p;
  p.count = k_total;
  p.gram = Eigen::MatrixXd::Zero(nv, nv);
  p.rhs_vec = Eigen::VectorXd::Zero(nv);
  if (basis.dim_v() >= k_total) {
    std::ostringstream msg;
    msg << "dim V = " << basis.dim_v() << " is not smaller than K = " << k_total;
    p.warnings.push_back(msg.str());
  }

  Eigen::MatrixXd g;
  Eigen::VectorXd y;
  std::vector<double> jx(dims);
  for (std::size_t begin = 0; begin < k_total; begin += kAssemblyBlock) {
    const std::size_t count = std::min(kAssemblyBlock, k_total - begin);
    detail::gradient_columns(basis, pairs.states, begin, count, g, threads);
    y.resize(static_cast<Eigen::Index>(count * dims));
    for (std::size_t k = 0; k < count; ++k) {
      apply_j(pairs.derivative(begin + k), jx);
      for (std::size_t m = 0; m < dims; ++m) y(static_cast<Eigen::Index>(k * dims + m)) = jx[m];
    }
    p.gram.selfadjointView<Eigen::Lower>().rankUpdate(g);
    p.rhs_vec.noalias() += g * y;
  }
  p.gram.triangularView<Eigen::StrictlyUpper>() = p.gram.transpose();
  const double inv_k = 1.0 / static_cast<double>(k_total);
  p.gram *= inv_k;
  p.rhs_vec *= inv_k;
  return p;
}

PinvSolution solve_symmetric_pinv(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                  double rel_tol) {
  if (a.rows() != a.cols() || a.rows() != b.rows() || a.rows() == 0)
    throw ArgumentError("pseudo-inverse solve: shape mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw DegenerateProblemError("eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lmax = lam.maxCoeff();
  PinvSolution sol;
  sol.report.eig_min = lam.minCoeff();
  sol.report.eig_max = lmax;
  if (!(lmax > 0.0)) throw DegenerateProblemError("least-squares matrix has no positive eigenvalue");
  const double cutoff = rel_tol * lmax;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > cutoff) {
      inv(i) = 1.0 / lam(i);
      ++sol.report.rank;
    }
  }
  if (sol.report.rank == 0) throw DegenerateProblemError("all eigenvalues truncated");
  const Eigen::MatrixXd& v = es.eigenvectors();
  sol.x = v * (inv.asDiagonal() * (v.transpose() * b));
  sol.report.residual = (a * sol.x - b).norm();
  return sol;
}

HamiltonianModel::HamiltonianModel(TotalDegreeBasis basis, std::vector<double> coefficients,
                                   SolverReport report)
    : basis_(std::make_shared<const TotalDegreeBasis>(std::move(basis))),
      coefficients_(std::move(coefficients)),
      report_(report) {
  if (coefficients_.size() != basis_->dim_v())
    throw ArgumentError("model has " + std::to_string(coefficients_.size()) +
                        " coefficients, basis dim V is " + std::to_string(basis_->dim_v()));
}

double HamiltonianModel::eval(std::span<const double> x) const {
  return basis_->combine(coefficients_, x, {});
}

void HamiltonianModel::grad(std::span<const double> x, std::span<double> out) const {
  basis_->combine(coefficients_, x, out);
}

std::vector<double> HamiltonianModel::grad(std::span<const double> x) const {
  std::vector<double> g(x.size());
  grad(x, g);
  return g;
}

HamiltonianModel HamiltonianModel::with_policy(DomainPolicy policy) const {
  HamiltonianModel m(basis_->with_policy(policy), coefficients_, report_);
  m.pairs_hash = pairs_hash;
  m.pair_count = pair_count;
  return m;
}

HamiltonianModel solve(const GradientLSProblem& problem, const TotalDegreeBasis& basis,
                       double rel_tol) {
  if (problem.dim_v() != basis.dim_v())
    throw ArgumentError("problem size does not match basis dim V");
  PinvSolution sol = solve_symmetric_pinv(problem.gram, problem.rhs_vec, rel_tol);
  std::vector<double> c(sol.x.data(), sol.x.data() + sol.x.rows());
  HamiltonianModel model(basis, std::move(c), sol.report);
  model.pair_count = problem.count;
  return model;
}

HamiltonianModel fit_hamiltonian(const DataPairSet& pairs, const TotalDegreeBasis& basis,
                                 double rel_tol, unsigned threads) {
  HamiltonianModel model = solve(assemble(pairs, basis, threads), basis, rel_tol);
  model.pairs_hash = hex64(pairs.content_hash());
  model.pair_count = pairs.count();
  return model;
}

double htilde_eval(const HamiltonianModel& model, std::span<const double> x) {
  return model.eval(x);
}

std::vector<double> htilde_grad(const HamiltonianModel& model, std::span<const double> x) {
  return model.grad(x);
}

HamiltonianSystem reconstructed_system(const HamiltonianModel& model) {
  auto shared = std::make_shared<const HamiltonianModel>(model);
  HamiltonianSystem s;
  s.name = "reconstructed";
  s.dim_d = model.basis().dims() / 2;
  s.default_domain = model.basis().domain();
  s.hamiltonian = [shared](std::span<const double> u) { return shared->eval(u); };
  s.rhs = [shared](std::span<const double> u, std::span<double> out) {
    thread_local std::vector<double> g;
    g.resize(u.size());
    shared->grad(u, g);
    apply_j_inverse(g, out);
  };
  return s;
}

std::vector<double> truncate_TL(std::span<const double> g, double level) {
  if (!(level > 0.0)) throw ArgumentError("truncate_TL: level must be positive");
  double n2 = 0.0;
  for (double v : g) n2 += v * v;
  const double norm = std::sqrt(n2);
  std::vector<double> out(g.begin(), g.end());
  if (norm <= level) return out;
  const double f = level / norm;
  for (double& v : out) v *= f;
  return out;
}

double default_truncation_level(const DataPairSet& pairs) {
  double best = 0.0;
  for (std::size_t k = 0; k < pairs.count(); ++k) {
    double n2 = 0.0;
    for (double v : pairs.derivative(k)) n2 += v * v;  // |J v| = |v|
    best = std::max(best, std::sqrt(n2));
  }
  return best;
}

NonSPModel::NonSPModel(TotalDegreeBasis basis, Eigen::MatrixXd coefficients, SolverReport report)
    : basis_(std::make_shared<const TotalDegreeBasis>(std::move(basis))),
      coefficients_(std::move(coefficients)),
      report_(report) {
  if (coefficients_.rows() != basis_->dims() ||
      coefficients_.cols() != static_cast<Eigen::Index>(basis_->dim_w()))
    throw ArgumentError("non-SP coefficient matrix must be 2d x dim W");
}

void NonSPModel::eval(std::span<const double> x, std::span<double> out) const {
  thread_local Eigen::VectorXd phi;
  phi.resize(static_cast<Eigen::Index>(basis_->dim_w()));
  basis_->eval_all(x, std::span<double>(phi.data(), basis_->dim_w()));
  Eigen::Map<Eigen::VectorXd>(out.data(), coefficients_.rows()).noalias() = coefficients_ * phi;
}

VectorField NonSPModel::field() const {
  auto self = std::make_shared<const NonSPModel>(*this);
  return [self](std::span<const double> x, std::span<double> out) { self->eval(x, out); };
}

NonSPModel fit_nonsp(const DataPairSet& pairs, const TotalDegreeBasis& basis, double rel_tol,
                     unsigned threads) {
  check_dims(pairs, basis);
  const std::size_t k_total = pairs.count();
  const std::size_t dims = pairs.width();
  const auto nw = static_cast<Eigen::Index>(basis.dim_w());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nw, nw);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nw, static_cast<Eigen::Index>(dims));
  Eigen::MatrixXd phi, xdot;
  for (std::size_t begin = 0; begin < k_total; begin += kAssemblyBlock) {
    const std::size_t count = std::min(kAssemblyBlock, k_total - begin);
    phi.resize(nw, static_cast<Eigen::Index>(count));
    xdot.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dims));
    parallel_for(count, threads, [&](std::size_t k) {
      basis.eval_all(pairs.state(begin + k),
                     std::span<double>(phi.data() + k * basis.dim_w(), basis.dim_w()));
    });
    for (std::size_t k = 0; k < count; ++k) {
      const auto d = pairs.derivative(begin + k);
      for (std::size_t m = 0; m < dims; ++m)
        xdot(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m)) = d[m];
    }
    gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
    rhs.noalias() += phi * xdot;
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  gram /= static_cast<double>(k_total);
  rhs /= static_cast<double>(k_total);
  PinvSolution sol = solve_symmetric_pinv(gram, rhs, rel_tol);
  return NonSPModel(basis, sol.x.transpose(), sol.report);
}

double symplectic_defect(const VectorField& field, const DomainBox& box, std::size_t samples,
                         std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("symplectic_defect: need at least one sample");
  const std::size_t n = box.dims();
  std::vector<double> h(n);
  for (std::size_t m = 0; m < n; ++m) h[m] = 1e-5 * box.extent(m);
  CounterRng rng(seed);
  std::vector<double> x(n), xp(n), f_plus(n), f_minus(n), jf_plus(n), jf_minus(n);
  Eigen::MatrixXd jac(n, n);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t m = 0; m < n; ++m)
      x[m] = rng.uniform(box.lower()[m] + h[m], box.upper()[m] - h[m]);
    for (std::size_t m = 0; m < n; ++m) {
      xp = x;
      xp[m] = x[m] + h[m];
      field(xp, f_plus);
      xp[m] = x[m] - h[m];
      field(xp, f_minus);
      apply_j(f_plus, jf_plus);
      apply_j(f_minus, jf_minus);
      for (std::size_t i = 0; i < n; ++i)
        jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) =
            (jf_plus[i] - jf_minus[i]) / (2.0 * h[m]);
    }
    worst = std::max(worst, (jac - jac.transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace hamlearn
