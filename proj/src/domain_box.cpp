#include "hamlearn/domain_box.hpp"

#include <cmath>
#include <string>

#include "hamlearn/errors.hpp"

namespace hamlearn {

DomainBox::DomainBox(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw ArgumentError("domain bounds differ in length");
  if (lower_.empty() || lower_.size() % 2 != 0)
    throw ArgumentError("domain dimension must be even and nonzero");
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i]))
      throw ArgumentError("domain bounds invalid on axis " + std::to_string(i));
  }
}

DomainBox DomainBox::cube(std::size_t dims, double lo, double hi) {
  return DomainBox(std::vector<double>(dims, lo), std::vector<double>(dims, hi));
}

double DomainBox::volume() const noexcept {
  double v = 1.0;
  for (std::size_t i = 0; i < dims(); ++i) v *= extent(i);
  return v;
}

bool DomainBox::contains(std::span<const double> x, double rel_tol) const {
  if (x.size() != dims()) return false;
  for (std::size_t i = 0; i < dims(); ++i) {
    const double tol = rel_tol * extent(i);
    if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
  }
  return true;
}

}  // namespace hamlearn
