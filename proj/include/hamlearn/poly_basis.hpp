#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hamlearn/domain_box.hpp"

namespace hamlearn {

struct MultiIndex {
  std::vector<int> exponents;
  int total = 0;

  bool operator==(const MultiIndex&) const = default;
};

// C(n + dims, dims); throws CapacityError on overflow.
std::size_t total_degree_count(int n, int dims);

// All multi-indices with |i| <= n in graded lexicographic order.
std::vector<MultiIndex> enumerate_indices(int n, int dims);

// (P_k(t), P_k'(t)), t clamped into [-1, 1].
std::pair<double, double> legendre_eval_with_deriv(int k, double t);

// P_0..P_n and their derivatives at t (no clamping).
void legendre_table(int n, double t, std::span<double> values, std::span<double> derivs);

// Nodes and weights of the Gauss-Legendre rule on [-1, 1]; exact to degree
// 2 * points - 1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre(int points);

// What to do with points outside the basis domain.
//   strict:      DomainError beyond 1e-9 relative to the extent
//   clamp:       project onto the box, evaluate there
//   extrapolate: evaluate the polynomials as-is
enum class DomainPolicy { kStrict, kClamp, kExtrapolate };

std::string to_string(DomainPolicy policy);
DomainPolicy domain_policy_from_string(const std::string& name);

struct BasisDescriptor {
  int degree = 0;
  int dims = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::string ordering = "graded-lex";
  DomainPolicy policy = DomainPolicy::kStrict;
};

// Tensor-product Legendre basis of the total-degree space P_n on a box.
// phi_0 is the constant; the gradient space V is spanned by grad phi_j, j >= 1.
class TotalDegreeBasis {
 public:
  TotalDegreeBasis(int degree, DomainBox domain, DomainPolicy policy = DomainPolicy::kStrict);
  explicit TotalDegreeBasis(const BasisDescriptor& descriptor);

  int degree() const noexcept { return degree_; }
  int dims() const noexcept { return dims_; }
  const DomainBox& domain() const noexcept { return domain_; }
  DomainPolicy policy() const noexcept { return policy_; }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  std::size_t dim_w() const noexcept { return indices_.size(); }
  std::size_t dim_v() const noexcept { return indices_.size() - 1; }

  TotalDegreeBasis with_policy(DomainPolicy policy) const;
  BasisDescriptor descriptor() const;

  // Affine map into [-1, 1]^dims, applying the domain policy.
  void to_reference(std::span<const double> x, std::span<double> s) const;

  double eval(std::size_t j, std::span<const double> x) const;
  std::vector<double> grad(std::size_t j, std::span<const double> x) const;

  // out[j] = phi_j(x) for j < dim_w.
  void eval_all(std::span<const double> x, std::span<double> out) const;

  // Gradients of the nonconstant functions, component-major:
  // out[m * dim_v + (j - 1)] = d phi_j / d x_m.
  void grad_all(std::span<const double> x, std::span<double> out) const;

  // sum_j c_j phi_j(x) over the nonconstant functions (coeffs.size() == dim_v);
  // writes the gradient into grad_out when it is non-empty.
  double combine(std::span<const double> coeffs, std::span<const double> x,
                 std::span<double> grad_out) const;

 private:
  struct Tables;
  void fill_tables(std::span<const double> x, Tables& t) const;

  int degree_;
  int dims_;
  DomainBox domain_;
  DomainPolicy policy_;
  std::vector<MultiIndex> indices_;
  std::vector<int> exponents_;  // dim_w x dims, row-major
  std::vector<double> scale_;   // 2 / (b - a)
};

// Estimate of K_N = sup_x sum_j |grad phi_j(x)|^2 on a tensor grid of
// grid_points_per_axis points per axis (endpoints included). Above four
// dimensions a Monte Carlo sample of min(g^dims, 1e6) points is used.
// With orthonormalize the gradient basis is whitened by the inverse square root
// of its empirical Gram matrix on the same points.
double kn_estimate(const TotalDegreeBasis& basis, int grid_points_per_axis, bool orthonormalize);

// Same quantity over an explicit point set (e.g. training states), whitened
// against the empirical Gram of those points.
double kn_estimate_on_points(const TotalDegreeBasis& basis, std::span<const double> points);

struct StabilityDiagnostic {
  double kn_estimate = 0.0;
  std::size_t sample_count = 0;
  std::size_t dim_v = 0;
  double r = 1.0;
  double lambda = 0.0;
  double threshold = 0.0;
  bool satisfied = false;
  double beta_delta = 0.0;
  double failure_probability_bound = 0.0;
};

// Sampling condition K_N <= lambda K / log K with
// lambda = (3 log(3/2) - 1) / (2 + 2r). dim_v enters the probability bound
// 2 N exp(-beta_{1/2} K / K_N).
StabilityDiagnostic check_stability(double kn, std::size_t sample_count, double r,
                                    std::size_t dim_v = 1);

}  // namespace hamlearn
