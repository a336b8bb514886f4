#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hamlearn/data_pipeline.hpp"
#include "hamlearn/poly_basis.hpp"
#include "hamlearn/systems.hpp"

namespace hamlearn {

// Normal equations A c = b of the gradient least-squares fit:
//   a_ij = 1/K sum_k grad phi_i(x_k) . grad phi_j(x_k)
//   b_i  = 1/K sum_k (J xdot_k) . grad phi_i(x_k)
struct GradientLSProblem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs_vec;
  std::size_t count = 0;
  std::vector<std::string> warnings;  // e.g. N >= K
  std::size_t dim_v() const noexcept { return static_cast<std::size_t>(rhs_vec.size()); }
};

// Pairs are processed in fixed blocks of kAssemblyBlock in index order and the
// block contributions are accumulated sequentially, so the result does not
// depend on `threads`.
inline constexpr std::size_t kAssemblyBlock = 512;

GradientLSProblem assemble(const DataPairSet& pairs, const TotalDegreeBasis& basis,
                           unsigned threads = 1);

struct SolverReport {
  std::size_t rank = 0;
  double eig_min = 0.0;
  double eig_max = 0.0;
  double residual = 0.0;
};

// Symmetric eigendecomposition pseudo-inverse: eigenvalues below
// rel_tol * lambda_max are dropped. X solves A X = B column by column.
struct PinvSolution {
  Eigen::MatrixXd x;
  SolverReport report;
};
PinvSolution solve_symmetric_pinv(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                  double rel_tol);

// H~_0(x) = sum_{j>=1} c_j phi_j(x); the additive constant is fixed to zero.
class HamiltonianModel {
 public:
  HamiltonianModel(TotalDegreeBasis basis, std::vector<double> coefficients,
                   SolverReport report = {});

  const TotalDegreeBasis& basis() const noexcept { return *basis_; }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  const SolverReport& solver_report() const noexcept { return report_; }
  double constant() const noexcept { return 0.0; }

  std::string pairs_hash;  // provenance of the training set, hex
  std::size_t pair_count = 0;

  double eval(std::span<const double> x) const;
  std::vector<double> grad(std::span<const double> x) const;
  void grad(std::span<const double> x, std::span<double> out) const;

  HamiltonianModel with_policy(DomainPolicy policy) const;

 private:
  std::shared_ptr<const TotalDegreeBasis> basis_;
  std::vector<double> coefficients_;
  SolverReport report_;
};

HamiltonianModel solve(const GradientLSProblem& problem, const TotalDegreeBasis& basis,
                       double rel_tol = 1e-10);

// Convenience: assemble + solve, with the training-set hash attached.
HamiltonianModel fit_hamiltonian(const DataPairSet& pairs, const TotalDegreeBasis& basis,
                                 double rel_tol = 1e-10, unsigned threads = 1);

double htilde_eval(const HamiltonianModel& model, std::span<const double> x);
std::vector<double> htilde_grad(const HamiltonianModel& model, std::span<const double> x);

// du/dt = J^{-1} grad H~(u).
HamiltonianSystem reconstructed_system(const HamiltonianModel& model);

// T_L(g) = L g / max(|g|_2, L).
std::vector<double> truncate_TL(std::span<const double> g, double level);

// Largest |J xdot_k|_2 over the data; surrogate for the bound L.
double default_truncation_level(const DataPairSet& pairs);

// Component-wise least-squares fit xdot_i ~ sum_j d_ij phi_j(x) over all of W.
class NonSPModel {
 public:
  NonSPModel(TotalDegreeBasis basis, Eigen::MatrixXd coefficients, SolverReport report = {});

  const TotalDegreeBasis& basis() const noexcept { return *basis_; }
  const Eigen::MatrixXd& coefficients() const noexcept { return coefficients_; }
  const SolverReport& solver_report() const noexcept { return report_; }

  void eval(std::span<const double> x, std::span<double> out) const;
  VectorField field() const;

 private:
  std::shared_ptr<const TotalDegreeBasis> basis_;
  Eigen::MatrixXd coefficients_;  // 2d x dim_w
  SolverReport report_;
};

NonSPModel fit_nonsp(const DataPairSet& pairs, const TotalDegreeBasis& basis,
                     double rel_tol = 1e-10, unsigned threads = 1);

// max over sampled points of max_ij |D(Jf)_ij - D(Jf)_ji|, Jacobian by central
// differences with step 1e-5 * extent. Points are drawn uniformly from the box
// shrunk by one stencil step.
double symplectic_defect(const VectorField& field, const DomainBox& box, std::size_t samples,
                         std::uint64_t seed = 0);

// Tensor Gauss-Legendre rule on a box, weights normalised to sum to one
// (uniform probability measure).
struct BoxQuadrature {
  std::vector<double> points;  // P x dims
  std::vector<double> weights;
  std::size_t size() const noexcept { return weights.size(); }
};
BoxQuadrature box_quadrature(const DomainBox& box, int points_per_axis);

// Spectral norm |A - I| after orthonormalising the gradient basis against the
// uniform measure on the basis domain.
double a_deviation(const DataPairSet& pairs, const TotalDegreeBasis& basis,
                   int quadrature_points_per_axis = 0, unsigned threads = 1);

// |grad H - Pi_V grad H| in L^2 of the uniform measure, by quadrature.
double best_approx_error(const VectorField& truth_grad, const TotalDegreeBasis& basis,
                         int quadrature_points_per_axis);

// |f - g|_{2, L^2} under the uniform measure on box.
double gradient_l2_error(const VectorField& f, const VectorField& g, const DomainBox& box,
                         int quadrature_points_per_axis);

struct AlignmentResult {
  double error = 0.0;   // RMS of H~_0 + C - H
  double offset = 0.0;  // C = mean(H - H~_0)
};
AlignmentResult alignment_error(const ScalarField& model_h, const ScalarField& truth_h,
                                std::span<const double> sample_points, int width);
AlignmentResult alignment_error(const HamiltonianModel& model, const ScalarField& truth_h,
                                std::span<const double> sample_points);

struct DiagnosticsReport {
  double a_minus_i_norm = 0.0;
  double best_approx_error = 0.0;
  double alignment_error = 0.0;
  double alignment_offset = 0.0;
  double symplectic_defect = 0.0;
  std::optional<double> nonsp_symplectic_defect;
  double truncation_level = 0.0;
  double kn_uniform = 0.0;
  double kn_empirical = 0.0;
  std::optional<double> tau_bound;
};

}  // namespace hamlearn
