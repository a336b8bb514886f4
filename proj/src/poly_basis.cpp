#include "hamlearn/poly_basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "detail.hpp"
#include "hamlearn/errors.hpp"
#include "hamlearn/parallel.hpp"
#include "hamlearn/rng.hpp"

namespace hamlearn {

namespace {

// Index sets beyond this are refused rather than exhausting memory.
constexpr std::size_t kMaxBasisSize = std::size_t{1} << 26;

void compositions(int remaining, int pos, std::vector<int>& current,
                  std::vector<MultiIndex>& out, int total) {
  const int dims = static_cast<int>(current.size());
  if (pos == dims - 1) {
    current[pos] = remaining;
    out.push_back({current, total});
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    current[pos] = e;
    compositions(remaining - e, pos + 1, current, out, total);
  }
}

}  // namespace

std::size_t total_degree_count(int n, int dims) {
  if (n < 0 || dims < 1) throw ArgumentError("total_degree_count: need n >= 0 and dims >= 1");
  // C(n + dims, dims) built as prod_{i=1..dims} (n + i) / i, exact at each step.
  std::size_t c = 1;
  for (int i = 1; i <= dims; ++i) {
    std::size_t next;
    if (__builtin_mul_overflow(c, static_cast<std::size_t>(n + i), &next))
      throw CapacityError("total-degree index count overflows");
    c = next / static_cast<std::size_t>(i);
  }
  return c;
}

std::vector<MultiIndex> enumerate_indices(int n, int dims) {
  const std::size_t count = total_degree_count(n, dims);
  if (count > kMaxBasisSize)
    throw CapacityError("total-degree index set has " + std::to_string(count) +
                        " entries, above the supported maximum");
  std::vector<MultiIndex> out;
  out.reserve(count);
  std::vector<int> current(static_cast<std::size_t>(dims), 0);
  for (int t = 0; t <= n; ++t) compositions(t, 0, current, out, t);
  return out;
}

void legendre_table(int n, double t, std::span<double> values, std::span<double> derivs) {
  values[0] = 1.0;
  derivs[0] = 0.0;
  if (n == 0) return;
  values[1] = t;
  derivs[1] = 1.0;
  for (int k = 1; k < n; ++k) {
    values[k + 1] = ((2 * k + 1) * t * values[k] - k * values[k - 1]) / (k + 1);
    derivs[k + 1] = derivs[k - 1] + (2 * k + 1) * values[k];
  }
}

std::pair<double, double> legendre_eval_with_deriv(int k, double t) {
  if (k < 0) throw ArgumentError("legendre_eval_with_deriv: negative degree");
  t = std::clamp(t, -1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(k) + 1), d(static_cast<std::size_t>(k) + 1);
  legendre_table(k, t, v, d);
  return {v[k], d[k]};
}

QuadratureRule gauss_legendre(int points) {
  if (points < 1) throw ArgumentError("gauss_legendre: need at least one point");
  QuadratureRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  std::vector<double> v(points + 1), d(points + 1);
  for (int i = 0; i < (points + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    for (int it = 0; it < 100; ++it) {
      legendre_table(points, x, v, d);
      const double dx = v[points] / d[points];
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre_table(points, x, v, d);
    const double w = 2.0 / ((1.0 - x * x) * d[points] * d[points]);
    rule.nodes[i] = -x;
    rule.nodes[points - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[points - 1 - i] = w;
  }
  if (points % 2 == 1) rule.nodes[points / 2] = 0.0;
  return rule;
}

std::string to_string(DomainPolicy policy) {
  switch (policy) {
    case DomainPolicy::kStrict: return "strict";
    case DomainPolicy::kClamp: return "clamp";
    case DomainPolicy::kExtrapolate: return "extrapolate";
  }
  return "strict";
}

DomainPolicy domain_policy_from_string(const std::string& name) {
  if (name == "strict") return DomainPolicy::kStrict;
  if (name == "clamp") return DomainPolicy::kClamp;
  if (name == "extrapolate") return DomainPolicy::kExtrapolate;
  throw ArgumentError("unknown domain policy '" + name + "'");
}

// Per-call scratch: 1-D Legendre values/derivatives for every coordinate.
struct TotalDegreeBasis::Tables {
  std::vector<double> s, values, derivs, prefix;
};

TotalDegreeBasis::TotalDegreeBasis(int degree, DomainBox domain, DomainPolicy policy)
    : degree_(degree), dims_(static_cast<int>(domain.dims())), domain_(std::move(domain)),
      policy_(policy) {
  if (degree_ < 1) throw ArgumentError("basis degree must be >= 1");
  if (dims_ < 2) throw ArgumentError("basis domain must be at least two-dimensional");
  indices_ = enumerate_indices(degree_, dims_);
  exponents_.reserve(indices_.size() * dims_);
  for (const auto& idx : indices_)
    exponents_.insert(exponents_.end(), idx.exponents.begin(), idx.exponents.end());
  scale_.resize(dims_);
  for (int m = 0; m < dims_; ++m) scale_[m] = 2.0 / domain_.extent(m);
}

TotalDegreeBasis::TotalDegreeBasis(const BasisDescriptor& d)
    : TotalDegreeBasis(d.degree, DomainBox(d.lower, d.upper), d.policy) {
  if (d.dims != dims_) throw ArgumentError("basis descriptor dimension mismatch");
  if (d.ordering != "graded-lex")
    throw ArgumentError("unsupported basis ordering '" + d.ordering + "'");
}

TotalDegreeBasis TotalDegreeBasis::with_policy(DomainPolicy policy) const {
  TotalDegreeBasis copy = *this;
  copy.policy_ = policy;
  return copy;
}

BasisDescriptor TotalDegreeBasis::descriptor() const {
  return {degree_, dims_, domain_.lower(), domain_.upper(), "graded-lex", policy_};
}

void TotalDegreeBasis::to_reference(std::span<const double> x, std::span<double> s) const {
  if (x.size() != static_cast<std::size_t>(dims_))
    throw ArgumentError("basis evaluation: point has " + std::to_string(x.size()) +
                        " coordinates, basis expects " + std::to_string(dims_));
  constexpr double kTol = 2e-9;  // 1e-9 of the extent, in reference units
  for (int m = 0; m < dims_; ++m) {
    const double a = domain_.lower()[m], b = domain_.upper()[m];
    double t = (2.0 * x[m] - (a + b)) / (b - a);
    if (!std::isfinite(t)) throw DomainError("basis evaluation: non-finite coordinate");
    switch (policy_) {
      case DomainPolicy::kStrict:
        if (std::abs(t) > 1.0 + kTol) {
          std::ostringstream msg;
          msg << "point outside basis domain on axis " << m << ": " << x[m] << " not in [" << a
              << ", " << b << "]";
          throw DomainError(msg.str());
        }
        t = std::clamp(t, -1.0, 1.0);
        break;
      case DomainPolicy::kClamp:
        t = std::clamp(t, -1.0, 1.0);
        break;
      case DomainPolicy::kExtrapolate:
        break;
    }
    s[m] = t;
  }
}

void TotalDegreeBasis::fill_tables(std::span<const double> x, Tables& t) const {
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  t.s.resize(dims_);
  t.values.resize(stride * dims_);
  t.derivs.resize(stride * dims_);
  t.prefix.resize(dims_);
  to_reference(x, t.s);
  for (int m = 0; m < dims_; ++m) {
    std::span<double> v(t.values.data() + m * stride, stride);
    std::span<double> d(t.derivs.data() + m * stride, stride);
    legendre_table(degree_, t.s[m], v, d);
    for (double& dv : d) dv *= scale_[m];
  }
}

double TotalDegreeBasis::eval(std::size_t j, std::span<const double> x) const {
  if (j >= dim_w()) throw ArgumentError("basis index out of range");
  thread_local Tables t;
  fill_tables(x, t);
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  const int* e = exponents_.data() + j * dims_;
  double v = 1.0;
  for (int m = 0; m < dims_; ++m) v *= t.values[m * stride + e[m]];
  return v;
}

std::vector<double> TotalDegreeBasis::grad(std::size_t j, std::span<const double> x) const {
  if (j >= dim_w()) throw ArgumentError("basis index out of range");
  thread_local Tables t;
  fill_tables(x, t);
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  const int* e = exponents_.data() + j * dims_;
  std::vector<double> g(dims_);
  for (int m = 0; m < dims_; ++m) {
    double prod = t.derivs[m * stride + e[m]];
    for (int l = 0; l < dims_; ++l)
      if (l != m) prod *= t.values[l * stride + e[l]];
    g[m] = prod;
  }
  return g;
}

void TotalDegreeBasis::eval_all(std::span<const double> x, std::span<double> out) const {
  if (out.size() != dim_w()) throw ArgumentError("eval_all: output length mismatch");
  thread_local Tables t;
  fill_tables(x, t);
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  const int* e = exponents_.data();
  for (std::size_t j = 0; j < dim_w(); ++j, e += dims_) {
    double v = 1.0;
    for (int m = 0; m < dims_; ++m) v *= t.values[m * stride + e[m]];
    out[j] = v;
  }
}

void TotalDegreeBasis::grad_all(std::span<const double> x, std::span<double> out) const {
  const std::size_t nv = dim_v();
  if (out.size() != nv * dims_) throw ArgumentError("grad_all: output length mismatch");
  thread_local Tables t;
  fill_tables(x, t);
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  const int* e = exponents_.data() + dims_;
  for (std::size_t j = 1; j < dim_w(); ++j, e += dims_) {
    // prefix[m] = prod_{l<m} P(s_l); suffix accumulated on the way back.
    double acc = 1.0;
    for (int m = 0; m < dims_; ++m) {
      t.prefix[m] = acc;
      acc *= t.values[m * stride + e[m]];
    }
    double suffix = 1.0;
    for (int m = dims_ - 1; m >= 0; --m) {
      out[m * nv + (j - 1)] = t.prefix[m] * suffix * t.derivs[m * stride + e[m]];
      suffix *= t.values[m * stride + e[m]];
    }
  }
}

double TotalDegreeBasis::combine(std::span<const double> coeffs, std::span<const double> x,
                                 std::span<double> grad_out) const {
  if (coeffs.size() != dim_v()) throw ArgumentError("combine: coefficient count mismatch");
  const bool want_grad = !grad_out.empty();
  if (want_grad && grad_out.size() != static_cast<std::size_t>(dims_))
    throw ArgumentError("combine: gradient length mismatch");
  thread_local Tables t;
  fill_tables(x, t);
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  if (want_grad) std::fill(grad_out.begin(), grad_out.end(), 0.0);
  double value = 0.0;
  const int* e = exponents_.data() + dims_;
  for (std::size_t j = 1; j < dim_w(); ++j, e += dims_) {
    const double c = coeffs[j - 1];
    double acc = 1.0;
    for (int m = 0; m < dims_; ++m) {
      t.prefix[m] = acc;
      acc *= t.values[m * stride + e[m]];
    }
    value += c * acc;
    if (!want_grad) continue;
    double suffix = c;
    for (int m = dims_ - 1; m >= 0; --m) {
      grad_out[m] += t.prefix[m] * suffix * t.derivs[m * stride + e[m]];
      suffix *= t.values[m * stride + e[m]];
    }
  }
  return value;
}

namespace detail {

void gradient_columns(const TotalDegreeBasis& basis, std::span<const double> points,
                      std::size_t begin, std::size_t count, Eigen::MatrixXd& g, unsigned threads) {
  const std::size_t dims = static_cast<std::size_t>(basis.dims());
  const std::size_t nv = basis.dim_v();
  g.resize(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(count * dims));
  parallel_for(count, threads, [&](std::size_t k) {
    basis.grad_all(points.subspan((begin + k) * dims, dims),
                   std::span<double>(g.data() + k * dims * nv, dims * nv));
  });
}

Eigen::MatrixXd gradient_gram(const TotalDegreeBasis& basis, std::span<const double> points,
                              std::span<const double> weights, unsigned threads) {
  const std::size_t dims = static_cast<std::size_t>(basis.dims());
  const std::size_t total = points.size() / dims;
  const auto nv = static_cast<Eigen::Index>(basis.dim_v());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nv, nv);
  Eigen::MatrixXd g;
  constexpr std::size_t kBlock = 512;
  for (std::size_t begin = 0; begin < total; begin += kBlock) {
    const std::size_t count = std::min(kBlock, total - begin);
    gradient_columns(basis, points, begin, count, g, threads);
    if (!weights.empty()) {
      for (std::size_t k = 0; k < count; ++k)
        g.middleCols(static_cast<Eigen::Index>(k * dims), static_cast<Eigen::Index>(dims)) *=
            std::sqrt(weights[begin + k]);
    }
    gram.selfadjointView<Eigen::Lower>().rankUpdate(g);
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  if (weights.empty()) gram /= static_cast<double>(total);
  return gram;
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& gram, const TotalDegreeBasis& basis,
                             double rel_cutoff) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success) throw RankDeficiencyError("Gram eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lmax = lam.maxCoeff();
  std::vector<Eigen::Index> null_dirs;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (!(lam(i) > rel_cutoff * lmax)) null_dirs.push_back(i);
  if (!null_dirs.empty()) {
    std::ostringstream msg;
    msg << "gradient Gram matrix is rank deficient (" << null_dirs.size()
        << " null directions); dominant basis functions:";
    for (auto i : null_dirs) {
      Eigen::Index j;
      es.eigenvectors().col(i).cwiseAbs().maxCoeff(&j);
      msg << " (";
      const auto& e = basis.indices()[static_cast<std::size_t>(j) + 1].exponents;
      for (std::size_t m = 0; m < e.size(); ++m) msg << (m ? "," : "") << e[m];
      msg << ")";
    }
    throw RankDeficiencyError(msg.str());
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  return v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
}

}  // namespace detail

namespace {

std::vector<double> estimation_points(const TotalDegreeBasis& basis, int g) {
  const int dims = basis.dims();
  const auto& box = basis.domain();
  std::vector<double> pts;
  if (dims <= 4) {
    std::size_t total = 1;
    for (int m = 0; m < dims; ++m) total *= static_cast<std::size_t>(g);
    pts.resize(total * dims);
    for (std::size_t k = 0; k < total; ++k) {
      std::size_t rem = k;
      for (int m = dims - 1; m >= 0; --m) {
        const std::size_t i = rem % g;
        rem /= g;
        const double s = -1.0 + 2.0 * static_cast<double>(i) / (g - 1);
        pts[k * dims + m] = box.lower()[m] + 0.5 * (s + 1.0) * box.extent(m);
      }
    }
  } else {
    double total_d = std::pow(static_cast<double>(g), dims);
    const std::size_t total = static_cast<std::size_t>(std::min(total_d, 1e6));
    pts.resize(total * dims);
    CounterRng rng(0x6b6e5f6d63ULL);
    for (std::size_t k = 0; k < total; ++k)
      for (int m = 0; m < dims; ++m) pts[k * dims + m] = rng.uniform(box.lower()[m], box.upper()[m]);
  }
  return pts;
}

double kernel_diagonal_max(const TotalDegreeBasis& basis, std::span<const double> pts,
                           const Eigen::MatrixXd* whitening) {
  const std::size_t dims = static_cast<std::size_t>(basis.dims());
  const std::size_t total = pts.size() / dims;
  Eigen::MatrixXd g;
  double best = 0.0;
  constexpr std::size_t kBlock = 512;
  for (std::size_t begin = 0; begin < total; begin += kBlock) {
    const std::size_t count = std::min(kBlock, total - begin);
    detail::gradient_columns(basis, pts, begin, count, g, 1);
    Eigen::MatrixXd w = whitening ? Eigen::MatrixXd((*whitening) * g) : g;
    Eigen::RowVectorXd col_sq = w.colwise().squaredNorm();
    for (std::size_t k = 0; k < count; ++k)
      best = std::max(best, col_sq.segment(static_cast<Eigen::Index>(k * dims),
                                           static_cast<Eigen::Index>(dims)).sum());
  }
  return best;
}

}  // namespace

double kn_estimate(const TotalDegreeBasis& basis, int grid_points_per_axis, bool orthonormalize) {
  if (grid_points_per_axis < 2) throw ArgumentError("kn_estimate: need >= 2 points per axis");
  const TotalDegreeBasis b = basis.with_policy(DomainPolicy::kClamp);
  const std::vector<double> pts = estimation_points(b, grid_points_per_axis);
  if (!orthonormalize) return kernel_diagonal_max(b, pts, nullptr);
  const Eigen::MatrixXd gram = detail::gradient_gram(b, pts, {}, 1);
  const Eigen::MatrixXd w = detail::inverse_sqrt(gram, b);
  return kernel_diagonal_max(b, pts, &w);
}

double kn_estimate_on_points(const TotalDegreeBasis& basis, std::span<const double> points) {
  if (points.empty() || points.size() % basis.dims() != 0)
    throw ArgumentError("kn_estimate_on_points: malformed point list");
  const Eigen::MatrixXd gram = detail::gradient_gram(basis, points, {}, 1);
  const Eigen::MatrixXd w = detail::inverse_sqrt(gram, basis);
  return kernel_diagonal_max(basis, points, &w);
}

StabilityDiagnostic check_stability(double kn, std::size_t sample_count, double r,
                                    std::size_t dim_v) {
  if (sample_count <= 1) throw ArgumentError("check_stability: need K > 1");
  if (!(r > 0.0)) throw ArgumentError("check_stability: need r > 0");
  if (!(kn > 0.0)) throw ArgumentError("check_stability: K_N must be positive");
  StabilityDiagnostic s;
  s.kn_estimate = kn;
  s.sample_count = sample_count;
  s.dim_v = dim_v;
  s.r = r;
  const double k = static_cast<double>(sample_count);
  s.lambda = (3.0 * std::log(1.5) - 1.0) / (2.0 + 2.0 * r);
  s.threshold = s.lambda * k / std::log(k);
  s.satisfied = kn <= s.threshold;
  constexpr double delta = 0.5;
  s.beta_delta = (1.0 + delta) * std::log(1.0 + delta) - delta;
  s.failure_probability_bound = 2.0 * static_cast<double>(dim_v) * std::exp(-s.beta_delta * k / kn);
  return s;
}

}  // namespace hamlearn
