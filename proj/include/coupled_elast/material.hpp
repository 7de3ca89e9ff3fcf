#pragma once

#include "coupled_elast/core.hpp"

namespace coupled_elast {

/// Isotropic plane-strain material in Lame form.
struct Material {
  double lambda = 1.0;
  double mu = 0.5;

  Material() = default;
  Material(double lambda_, double mu_) : lambda(lambda_), mu(mu_) {
    if (!(mu > 0.0) || !(lambda >= 0.0))
      throw ConfigError("material: need mu > 0 and lambda >= 0 (got lambda=" + std::to_string(lambda) +
                        ", mu=" + std::to_string(mu) + ")");
  }

  /// Plane strain: lambda = E nu / ((1+nu)(1-2nu)), mu = E / (2(1+nu)).
  static Material from_young_poisson(double young, double poisson) {
    if (!(young > 0.0) || !(poisson >= 0.0) || !(poisson < 0.5))
      throw ConfigError("material: need E > 0 and 0 <= nu < 1/2");
    return {young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson)), young / (2.0 * (1.0 + poisson))};
  }

  /// Compliance A tau = (tau - lambda tr(tau) / (2 mu + 2 lambda) I) / (2 mu).
  Tensor2 compliance(const Tensor2& tau) const {
    return (tau - (lambda * tau.trace() / (2.0 * mu + 2.0 * lambda)) * Tensor2::Identity()) / (2.0 * mu);
  }
  /// Stiffness A^{-1} eps = 2 mu eps + lambda tr(eps) I.
  Tensor2 stiffness(const Tensor2& eps) const {
    return 2.0 * mu * eps + lambda * eps.trace() * Tensor2::Identity();
  }
};

}  // namespace coupled_elast
