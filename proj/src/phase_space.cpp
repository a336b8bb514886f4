#include "hamlearn/phase_space.hpp"

#include <cmath>
#include <string>

#include "hamlearn/errors.hpp"

namespace hamlearn {

StateVector::StateVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty() || values_.size() % 2 != 0)
    throw ArgumentError("state vector needs an even, nonzero length, got " +
                        std::to_string(values_.size()));
  for (double v : values_)
    if (!std::isfinite(v)) throw ArgumentError("state vector has a non-finite entry");
}

StateVector StateVector::from_pq(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ArgumentError("p and q blocks differ in length");
  std::vector<double> v(p.begin(), p.end());
  v.insert(v.end(), q.begin(), q.end());
  return StateVector(std::move(v));
}

namespace {

std::size_t half_of(std::size_t n) {
  if (n == 0 || n % 2 != 0)
    throw ArgumentError("phase-space vector needs an even, nonzero length, got " +
                        std::to_string(n));
  return n / 2;
}

}  // namespace

void apply_j(std::span<const double> xdot, std::span<double> out) {
  const std::size_t d = half_of(xdot.size());
  if (out.size() != xdot.size()) throw ArgumentError("apply_j: output length mismatch");
  for (std::size_t i = 0; i < d; ++i) {
    const double pdot = xdot[i];
    out[i] = xdot[d + i];
    out[d + i] = -pdot;
  }
}

std::vector<double> apply_j(std::span<const double> xdot) {
  std::vector<double> out(xdot.size());
  apply_j(xdot, out);
  return out;
}

void apply_j_inverse(std::span<const double> grad, std::span<double> out) {
  const std::size_t d = half_of(grad.size());
  if (out.size() != grad.size()) throw ArgumentError("apply_j_inverse: output length mismatch");
  for (std::size_t i = 0; i < d; ++i) {
    const double gp = grad[i];
    out[i] = -grad[d + i];
    out[d + i] = gp;
  }
}

std::vector<double> apply_j_inverse(std::span<const double> grad) {
  std::vector<double> out(grad.size());
  apply_j_inverse(grad, out);
  return out;
}

}  // namespace hamlearn
