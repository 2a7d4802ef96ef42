#include "aflguard/vecmath.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aflguard/error.hpp"

namespace aflguard {

ParamVector::ParamVector(std::size_t dim) : data_(dim, 0.0) {
  if (dim == 0) throw DimensionError("ParamVector: dimension must be >= 1");
}

ParamVector::ParamVector(std::vector<double> components) : data_(std::move(components)) {
  if (data_.empty()) throw DimensionError("ParamVector: dimension must be >= 1");
}

ParamVector::ParamVector(std::initializer_list<double> components)
    : ParamVector(std::vector<double>(components)) {}

ParamVector ParamVector::checked(std::vector<double> components) {
  ParamVector v(std::move(components));
  for (std::size_t i = 0; i < v.dim(); ++i) {
    if (!std::isfinite(v[i])) {
      throw std::invalid_argument("ParamVector: component " + std::to_string(i) + " is not finite");
    }
  }
  return v;
}

bool ParamVector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

ParamVector& ParamVector::operator+=(const ParamVector& other) {
  require_same_dim(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ParamVector& ParamVector::operator-=(const ParamVector& other) {
  require_same_dim(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

ParamVector& ParamVector::operator*=(double c) noexcept {
  for (double& x : data_) x *= c;
  return *this;
}

ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
ParamVector operator*(double c, ParamVector a) { return a *= c; }
ParamVector operator-(ParamVector a) { return a *= -1.0; }

void require_same_dim(const ParamVector& a, const ParamVector& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  }
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

double l2norm(const ParamVector& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

double distance(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y) {
  require_same_dim(x, y);
  ParamVector out = y;
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] += alpha * x[i];
  return out;
}

double cosine(const ParamVector& a, const ParamVector& b) {
  const double na = l2norm(a);
  const double nb = l2norm(b);
  if (na == 0.0 || nb == 0.0) throw std::domain_error("cosine: zero-norm input");
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

namespace {

void require_uniform(std::span<const ParamVector> vs, const char* what) {
  if (vs.empty()) throw std::invalid_argument(std::string(what) + ": empty input list");
  for (const auto& v : vs) require_same_dim(vs.front(), v);
}

}  // namespace

ParamVector coordinate_median(std::span<const ParamVector> vs) {
  require_uniform(vs, "coordinate_median");
  const std::size_t n = vs.size();
  const std::size_t d = vs.front().dim();
  ParamVector out(d);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = vs[i][j];
    const auto mid = column.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(column.begin(), mid, column.end());
    if (n % 2 == 1) {
      out[j] = *mid;
    } else {
      // lower middle is the max of the left partition
      const double lower = *std::max_element(column.begin(), mid);
      out[j] = 0.5 * (lower + *mid);
    }
  }
  return out;
}

ParamVector mean(std::span<const ParamVector> vs) {
  require_uniform(vs, "mean");
  ParamVector out(vs.front().dim());
  for (const auto& v : vs) out += v;
  out *= 1.0 / static_cast<double>(vs.size());
  return out;
}

}  // namespace aflguard
