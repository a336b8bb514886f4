#include <algorithm>
#include <cmath>

#include "detail.hpp"
#include "hamlearn/errors.hpp"
#include "hamlearn/learner.hpp"

namespace hamlearn {

BoxQuadrature box_quadrature(const DomainBox& box, int points_per_axis) {
  const QuadratureRule rule = gauss_legendre(points_per_axis);
  const std::size_t dims = box.dims();
  std::size_t total = 1;
  for (std::size_t m = 0; m < dims; ++m) total *= static_cast<std::size_t>(points_per_axis);
  BoxQuadrature q;
  q.points.resize(total * dims);
  q.weights.resize(total);
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    double w = 1.0;
    for (std::size_t mm = dims; mm-- > 0;) {
      const std::size_t i = rem % points_per_axis;
      rem /= points_per_axis;
      q.points[k * dims + mm] =
          box.lower()[mm] + 0.5 * (rule.nodes[i] + 1.0) * box.extent(mm);
      w *= 0.5 * rule.weights[i];
    }
    q.weights[k] = w;
  }
  return q;
}

double a_deviation(const DataPairSet& pairs, const TotalDegreeBasis& basis,
                   int quadrature_points_per_axis, unsigned threads) {
  const int qp = quadrature_points_per_axis > 0 ? quadrature_points_per_axis : basis.degree() + 2;
  const BoxQuadrature quad = box_quadrature(basis.domain(), qp);
  const Eigen::MatrixXd uniform_gram = detail::gradient_gram(basis, quad.points, quad.weights, threads);
  const Eigen::MatrixXd w = detail::inverse_sqrt(uniform_gram, basis);
  const GradientLSProblem problem = assemble(pairs, basis, threads);
  Eigen::MatrixXd dev = w * problem.gram * w;
  dev -= Eigen::MatrixXd::Identity(dev.rows(), dev.cols());
  dev = 0.5 * (dev + dev.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dev, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double best_approx_error(const VectorField& truth_grad, const TotalDegreeBasis& basis,
                         int quadrature_points_per_axis) {
  const BoxQuadrature quad = box_quadrature(basis.domain(), quadrature_points_per_axis);
  const std::size_t dims = static_cast<std::size_t>(basis.dims());
  const std::size_t nv = basis.dim_v();
  const Eigen::MatrixXd gram = detail::gradient_gram(basis, quad.points, quad.weights, 1);

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nv));
  std::vector<double> grads(nv * dims), f(dims);
  for (std::size_t k = 0; k < quad.size(); ++k) {
    const std::span<const double> x(quad.points.data() + k * dims, dims);
    basis.grad_all(x, grads);
    truth_grad(x, f);
    for (std::size_t m = 0; m < dims; ++m)
      rhs += quad.weights[k] * f[m] *
             Eigen::Map<const Eigen::VectorXd>(grads.data() + m * nv, static_cast<Eigen::Index>(nv));
  }
  const PinvSolution sol = solve_symmetric_pinv(gram, rhs, 1e-10);
  const std::vector<double> c(sol.x.data(), sol.x.data() + sol.x.rows());

  double err2 = 0.0;
  std::vector<double> g(dims);
  for (std::size_t k = 0; k < quad.size(); ++k) {
    const std::span<const double> x(quad.points.data() + k * dims, dims);
    basis.combine(c, x, g);
    truth_grad(x, f);
    double e = 0.0;
    for (std::size_t m = 0; m < dims; ++m) e += (f[m] - g[m]) * (f[m] - g[m]);
    err2 += quad.weights[k] * e;
  }
  return std::sqrt(err2);
}

double gradient_l2_error(const VectorField& f, const VectorField& g, const DomainBox& box,
                         int quadrature_points_per_axis) {
  const BoxQuadrature quad = box_quadrature(box, quadrature_points_per_axis);
  const std::size_t dims = box.dims();
  std::vector<double> a(dims), b(dims);
  double err2 = 0.0;
  for (std::size_t k = 0; k < quad.size(); ++k) {
    const std::span<const double> x(quad.points.data() + k * dims, dims);
    f(x, a);
    g(x, b);
    double e = 0.0;
    for (std::size_t m = 0; m < dims; ++m) e += (a[m] - b[m]) * (a[m] - b[m]);
    err2 += quad.weights[k] * e;
  }
  return std::sqrt(err2);
}

AlignmentResult alignment_error(const ScalarField& model_h, const ScalarField& truth_h,
                                std::span<const double> sample_points, int width) {
  if (width <= 0 || sample_points.empty() || sample_points.size() % width != 0)
    throw ArgumentError("alignment_error: malformed sample set");
  const std::size_t n = sample_points.size() / static_cast<std::size_t>(width);
  std::vector<double> diff(n);
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto x = sample_points.subspan(k * width, static_cast<std::size_t>(width));
    diff[k] = truth_h(x) - model_h(x);
    mean += diff[k];
  }
  mean /= static_cast<double>(n);
  double ms = 0.0;
  for (double d : diff) ms += (d - mean) * (d - mean);
  return {std::sqrt(ms / static_cast<double>(n)), mean};
}

AlignmentResult alignment_error(const HamiltonianModel& model, const ScalarField& truth_h,
                                std::span<const double> sample_points) {
  return alignment_error([&model](std::span<const double> x) { return model.eval(x); }, truth_h,
                         sample_points, model.basis().dims());
}

}  // namespace hamlearn
