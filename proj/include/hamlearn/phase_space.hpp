#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hamlearn {

// Point u = (p, q) in phase space R^{2d}; momenta first, positions second.
class StateVector {
 public:
  StateVector() = default;
  // Throws ArgumentError on odd/empty length or non-finite entries.
  explicit StateVector(std::vector<double> values);
  StateVector(std::initializer_list<double> values) : StateVector(std::vector<double>(values)) {}

  static StateVector from_pq(std::span<const double> p, std::span<const double> q);

  int dim_d() const noexcept { return static_cast<int>(values_.size() / 2); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> p() const noexcept { return values().first(values_.size() / 2); }
  std::span<const double> q() const noexcept { return values().last(values_.size() / 2); }
  const std::vector<double>& vec() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  bool operator==(const StateVector&) const = default;

 private:
  std::vector<double> values_;
};

// f(u, out): writes the 2d-vector field value at u into out.
using VectorField = std::function<void(std::span<const double>, std::span<double>)>;
using ScalarField = std::function<double(std::span<const double>)>;

// J * xdot with J = [[0, I], [-I, 0]]: (qdot, -pdot).
std::vector<double> apply_j(std::span<const double> xdot);
void apply_j(std::span<const double> xdot, std::span<double> out);

// J^{-1} * grad = (-grad_q, grad_p).
std::vector<double> apply_j_inverse(std::span<const double> grad);
void apply_j_inverse(std::span<const double> grad, std::span<double> out);

}  // namespace hamlearn
