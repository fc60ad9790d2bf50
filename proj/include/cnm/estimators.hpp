#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cnm/common.hpp"

namespace cnm {

/// Point estimate with a linearized (HC0-style) standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t n_members = 0;
    double effective_weight = 0.0; // sum of 1/pi_hat over members
};

/// Self-normalized inverse-probability-weighted mean over the members:
/// value = sum(y_i/pi_i) / sum(1/pi_i). Errors on empty membership.
/// `members` holds indices into y/pi_hat.
Estimate hajek(std::span<const double> y, std::span<const std::uint32_t> members,
               std::span<const double> pi_hat);

/// Linearized ratio-estimator variance:
/// sum w_i^2 (y_i - value)^2 / (sum w_i)^2 with w_i = 1/pi_i. Equals the HC0
/// variance of the constant coefficient in the weighted regression.
double hajek_variance(std::span<const double> y,
                      std::span<const std::uint32_t> members,
                      std::span<const double> pi_hat, double value);

/// (1/|U|) sum over members of y_i/pi_i. Diagnostics only; empirically has
/// much higher variance than Hajek. Empty membership gives 0.
Estimate horvitz_thompson(std::span<const double> y,
                          std::span<const std::uint32_t> members,
                          std::span<const double> pi_hat,
                          std::uint64_t universe_size);

enum class Regressors : std::uint8_t { ConstantOnly, ConstantAndZ };

struct WlsFit {
    std::vector<double> coef;    // [constant] or [constant, z]
    std::vector<double> hc0_se;  // sandwich standard errors
    std::uint64_t n = 0;
    double wsse = 0.0;           // sum of w_i * residual_i^2
};

/// Weighted least squares on the members; `weights` is aligned with `members`
/// (weights[k] belongs to members[k]). ConstantOnly reproduces the Hajek
/// estimator in the constant coefficient; ConstantAndZ yields the direct
/// effect in the z coefficient. Errors on rank deficiency (for ConstantAndZ,
/// both z values must be present).
WlsFit weighted_ls(std::span<const double> y, std::span<const std::uint8_t> z,
                   std::span<const std::uint32_t> members,
                   std::span<const double> weights, Regressors regressors);

/// Weighted sum of squared errors around `value` with weights 1/pi_i.
double wsse(std::span<const double> y, std::span<const std::uint32_t> members,
            std::span<const double> pi_hat, double value);

} // namespace cnm
