#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace mfc {

class RngStream;

/// Thrown for violated preconditions (bad sizes, non-simplex masses, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kSimplexTolerance = 1e-12;
inline constexpr double kRenormalizeTolerance = 1e-9;

/// Probability masses over the canonical index order 0..n-1 of a finite set.
///
/// Construction validates the simplex: masses must be nonnegative and sum to
/// one. Totals within 1e-12 of one are kept bit-exact, deviations up to 1e-9
/// are renormalized away, anything larger is rejected.
class FiniteDist {
 public:
  FiniteDist() = default;
  explicit FiniteDist(Eigen::VectorXd mass);

  static FiniteDist point_mass(Eigen::Index size, Eigen::Index at);
  static FiniteDist uniform(Eigen::Index size);

  Eigen::Index size() const { return mass_.size(); }
  double operator[](Eigen::Index i) const { return mass_[i]; }
  const Eigen::VectorXd& mass() const { return mass_; }

 private:
  Eigen::VectorXd mass_;
};

/// Checks nonnegativity and total mass; returns the renormalized vector.
/// Tiny negative entries (>= -1e-15, float drift) are clamped to zero.
Eigen::VectorXd validated_simplex(Eigen::VectorXd mass, const char* what);

template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar l1_distance(const Eigen::MatrixBase<DerivedP>& p,
                                      const Eigen::MatrixBase<DerivedQ>& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw DomainError("l1_distance: mismatched supports");
  return (p - q).cwiseAbs().sum();
}

inline double l1_distance(const FiniteDist& p, const FiniteDist& q) {
  return l1_distance(p.mass(), q.mass());
}

/// mu(f) = sum_a f(a) mu(a)
template <typename DerivedP, typename DerivedF>
typename DerivedP::Scalar expectation(const Eigen::MatrixBase<DerivedP>& p,
                                      const Eigen::MatrixBase<DerivedF>& f) {
  if (p.size() != f.size()) throw DomainError("expectation: mismatched supports");
  return p.cwiseProduct(f).sum();
}

inline double expectation(const FiniteDist& p, const Eigen::VectorXd& f) {
  return expectation(p.mass(), f);
}

/// Inverse-CDF draw over the canonical order of a mass vector.
template <typename Derived>
Eigen::Index sample_index(const Eigen::MatrixBase<Derived>& mass, double u) {
  double cumulative = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (mass[i] <= 0.0) continue;
    last_positive = i;
    cumulative += mass[i];
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap above the accumulated total
  return last_positive;
}

Eigen::Index sample(const FiniteDist& p, RngStream& rng);

}  // namespace mfc
