#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace aflguard {

/// Dense model-parameter / gradient vector. Always at least one component.
///
/// Components coming from outside the process (files, user input) go through
/// `ParamVector::checked`, which rejects NaN/Inf. Arithmetic inside the
/// simulator may legitimately overflow; the engine detects that as divergence.
class ParamVector {
 public:
  explicit ParamVector(std::size_t dim);
  explicit ParamVector(std::vector<double> components);
  ParamVector(std::initializer_list<double> components);

  static ParamVector checked(std::vector<double> components);
  static ParamVector zeros(std::size_t dim) { return ParamVector(dim); }

  std::size_t dim() const noexcept { return data_.size(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& components() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const noexcept;

  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator-=(const ParamVector& other);
  ParamVector& operator*=(double c) noexcept;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> data_;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator*(double c, ParamVector a);
ParamVector operator-(ParamVector a);

// Throws DimensionError unless a.dim() == b.dim().
void require_same_dim(const ParamVector& a, const ParamVector& b);

double dot(const ParamVector& a, const ParamVector& b);
double l2norm(const ParamVector& a);
double distance(const ParamVector& a, const ParamVector& b);

/// y + alpha * x
ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y);

/// Cosine similarity. Both inputs must have nonzero norm (std::domain_error otherwise).
double cosine(const ParamVector& a, const ParamVector& b);

/// Per-coordinate median; even counts average the two middle order statistics.
ParamVector coordinate_median(std::span<const ParamVector> vs);

ParamVector mean(std::span<const ParamVector> vs);

}  // namespace aflguard
