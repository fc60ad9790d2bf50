#include "cnm/estimators.hpp"

#include <cmath>

namespace cnm {

Estimate hajek(std::span<const double> y, std::span<const std::uint32_t> members,
               std::span<const double> pi_hat) {
    if (members.empty()) fail("hajek estimator: no members");
    double sw = 0.0, swy = 0.0;
    for (std::uint32_t i : members) {
        const double w = 1.0 / pi_hat[i];
        sw += w;
        swy += w * y[i];
    }
    Estimate est;
    est.value = swy / sw;
    est.n_members = members.size();
    est.effective_weight = sw;
    est.std_error = std::sqrt(hajek_variance(y, members, pi_hat, est.value));
    return est;
}

double hajek_variance(std::span<const double> y,
                      std::span<const std::uint32_t> members,
                      std::span<const double> pi_hat, double value) {
    if (members.empty()) fail("hajek variance: no members");
    double sw = 0.0, sw2e2 = 0.0;
    for (std::uint32_t i : members) {
        const double w = 1.0 / pi_hat[i];
        const double e = y[i] - value;
        sw += w;
        sw2e2 += w * w * e * e;
    }
    return sw2e2 / (sw * sw);
}

Estimate horvitz_thompson(std::span<const double> y,
                          std::span<const std::uint32_t> members,
                          std::span<const double> pi_hat,
                          std::uint64_t universe_size) {
    require(universe_size > 0, "horvitz-thompson: universe size must be positive");
    Estimate est;
    est.n_members = members.size();
    double s = 0.0, s2 = 0.0;
    for (std::uint32_t i : members) {
        const double w = 1.0 / pi_hat[i];
        s += w * y[i];
        s2 += (w * y[i]) * (w * y[i]);
        est.effective_weight += w;
    }
    const double n = static_cast<double>(universe_size);
    est.value = s / n;
    // crude independent-draw variance; this estimator is diagnostics only
    est.std_error = std::sqrt(s2) / n;
    return est;
}

WlsFit weighted_ls(std::span<const double> y, std::span<const std::uint8_t> z,
                   std::span<const std::uint32_t> members,
                   std::span<const double> weights, Regressors regressors) {
    if (members.empty()) fail("weighted least squares: no members");
    require(weights.size() == members.size(),
            "weighted least squares: weights must align with members");
    WlsFit fit;
    fit.n = members.size();

    if (regressors == Regressors::ConstantOnly) {
        double sw = 0.0, swy = 0.0;
        for (std::size_t k = 0; k < members.size(); ++k) {
            sw += weights[k];
            swy += weights[k] * y[members[k]];
        }
        const double beta = swy / sw;
        double sw2e2 = 0.0;
        fit.wsse = 0.0;
        for (std::size_t k = 0; k < members.size(); ++k) {
            const double e = y[members[k]] - beta;
            fit.wsse += weights[k] * e * e;
            sw2e2 += weights[k] * weights[k] * e * e;
        }
        fit.coef = {beta};
        fit.hc0_se = {std::sqrt(sw2e2 / (sw * sw))};
        return fit;
    }

    // design [1, z]: A = X'WX, b = X'Wy
    double sw = 0.0, swz = 0.0, swy = 0.0, swzy = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
        const std::uint32_t i = members[k];
        const double w = weights[k];
        const double zi = static_cast<double>(z[i]);
        sw += w;
        swz += w * zi;
        swy += w * y[i];
        swzy += w * zi * y[i];
    }
    // z is binary, so A = [[sw, swz], [swz, swz]]; det = swz * (sw - swz)
    const double det = swz * (sw - swz);
    if (!(det > 0.0))
        fail("weighted least squares: degenerate design (both z values required)");
    const double beta_z = swzy / swz - (swy - swzy) / (sw - swz);
    const double beta_0 = (swy - swzy) / (sw - swz);

    // HC0 sandwich: A^{-1} (sum w^2 e^2 x x') A^{-1}
    const double a00 = sw, a01 = swz, a11 = swz;
    const double inv00 = a11 / det, inv01 = -a01 / det, inv11 = a00 / det;
    double b00 = 0.0, b01 = 0.0, b11 = 0.0;
    fit.wsse = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
        const std::uint32_t i = members[k];
        const double w = weights[k];
        const double zi = static_cast<double>(z[i]);
        const double e = y[i] - beta_0 - beta_z * zi;
        fit.wsse += w * e * e;
        const double u = w * w * e * e;
        b00 += u;
        b01 += u * zi;
        b11 += u * zi * zi;
    }
    const double v00 = inv00 * (b00 * inv00 + b01 * inv01) + inv01 * (b01 * inv00 + b11 * inv01);
    const double v11 = inv01 * (b00 * inv01 + b01 * inv11) + inv11 * (b01 * inv01 + b11 * inv11);
    fit.coef = {beta_0, beta_z};
    fit.hc0_se = {std::sqrt(std::max(0.0, v00)), std::sqrt(std::max(0.0, v11))};
    return fit;
}

double wsse(std::span<const double> y, std::span<const std::uint32_t> members,
            std::span<const double> pi_hat, double value) {
    if (members.empty()) fail("wsse: no members");
    double s = 0.0;
    for (std::uint32_t i : members) {
        const double e = y[i] - value;
        s += (1.0 / pi_hat[i]) * e * e;
    }
    return s;
}

} // namespace cnm
