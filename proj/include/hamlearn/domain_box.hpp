#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hamlearn {

// Axis-aligned hypercube in phase space, lower[i] < upper[i].
class DomainBox {
 public:
  DomainBox() = default;
  DomainBox(std::vector<double> lower, std::vector<double> upper);

  // [lo, hi]^dims
  static DomainBox cube(std::size_t dims, double lo, double hi);

  std::size_t dims() const noexcept { return lower_.size(); }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  double extent(std::size_t i) const noexcept { return upper_[i] - lower_[i]; }
  double volume() const noexcept;

  // Inside, with a tolerance relative to each coordinate's extent.
  bool contains(std::span<const double> x, double rel_tol = 0.0) const;

  bool operator==(const DomainBox&) const = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

}  // namespace hamlearn
