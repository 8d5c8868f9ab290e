#include "mfc/prob.hpp"

#include "mfc/rng.hpp"

#include <string>

namespace mfc {

Eigen::VectorXd validated_simplex(Eigen::VectorXd mass, const char* what) {
  if (mass.size() == 0) throw DomainError(std::string(what) + ": empty support");
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (!std::isfinite(mass[i]))
      throw DomainError(std::string(what) + ": non-finite mass");
    if (mass[i] < 0.0) {
      if (mass[i] < -1e-15) throw DomainError(std::string(what) + ": negative mass");
      mass[i] = 0.0;
    }
  }
  const double total = mass.sum();
  if (std::abs(total - 1.0) > kRenormalizeTolerance)
    throw DomainError(std::string(what) + ": masses sum to " + std::to_string(total));
  if (std::abs(total - 1.0) > kSimplexTolerance) mass /= total;
  return mass;
}

FiniteDist::FiniteDist(Eigen::VectorXd mass)
    : mass_(validated_simplex(std::move(mass), "FiniteDist")) {}

FiniteDist FiniteDist::point_mass(Eigen::Index size, Eigen::Index at) {
  if (at < 0 || at >= size) throw DomainError("FiniteDist::point_mass: index out of range");
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(size);
  mass[at] = 1.0;
  return FiniteDist(std::move(mass));
}

FiniteDist FiniteDist::uniform(Eigen::Index size) {
  if (size <= 0) throw DomainError("FiniteDist::uniform: empty support");
  return FiniteDist(Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size)));
}

Eigen::Index sample(const FiniteDist& p, RngStream& rng) {
  return sample_index(p.mass(), rng.uniform());
}

}  // namespace mfc
