#pragma once

namespace defgrasp {

/// Isotropic linear elastic parameters with derived Lamé constants.
struct ElasticParams {
  double youngs_modulus = 2e5;  // Pa
  double poisson_ratio = 0.3;
  double density = 1000.0;      // kg/m^3
  double lame_mu = 0.0;         // Pa
  double lame_lambda = 0.0;     // Pa

  /// Validates E > 0, 0 <= nu < 0.5, rho > 0; throws ConfigError otherwise.
  static ElasticParams from_young_poisson(double youngs_modulus, double poisson_ratio,
                                          double density);
};

}  // namespace defgrasp
