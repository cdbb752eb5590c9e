#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "signalroot/types.hpp"

namespace signalroot {

// Non-informative (matching) prior configuration.  Only the constant choice
// of the arbitrary function g of the orthogonal parameter is implemented;
// the flag exists so reports can record the choice.  channel_constants holds
// the per-channel (s_k, t_k, u_k) the prior formulas consume; under the
// conditional model the totals s_k are constants.
struct PriorSpec {
    bool g_constant = true;
    std::vector<std::array<double, 3>> channel_constants;  // (s, t, u)

    static PriorSpec for_dataset(const Dataset& data) {
        PriorSpec spec;
        spec.channel_constants.reserve(data.size());
        for (const auto& c : data.channels)
            spec.channel_constants.push_back(
                {static_cast<double>(c.total()), c.t, c.u});
        return spec;
    }
};

namespace detail {

// A(psi, zeta) = psi t (psi+u) + zeta u (1+t); positive whenever
// zeta > 0 and psi + zeta > 0 (the quadratic in psi has no root there).
inline double prior_quad(double psi, double zeta, double t, double u) {
    return psi * t * (psi + u) + zeta * u * (1.0 + t);
}

inline void check_prior_domain(double psi, double zeta) {
    if (!(zeta > 0.0) || !(psi + zeta > 0.0))
        throw std::domain_error("prior: requires zeta > 0 and psi + zeta > 0");
}

}  // namespace detail

// Single-channel matching prior (up to a constant, g == 1):
//   [ {psi t (psi+u) + zeta u (1+t)} / {zeta^2 (zeta+psi)^2 pi^3} ]^{1/2}
inline double log_prior_single(double psi, double zeta, double t, double u) {
    detail::check_prior_domain(psi, zeta);
    const double pi = psi + zeta + u + zeta * t;
    const double quad = detail::prior_quad(psi, zeta, t, u);
    return 0.5 * (std::log(quad) - 2.0 * std::log(zeta) - 2.0 * std::log(zeta + psi) -
                  3.0 * std::log(pi));
}

inline double prior_single(double psi, double zeta, double t, double u) {
    return std::exp(log_prior_single(psi, zeta, t, u));
}

// Multi-channel matching prior (up to a constant, g == 1):
//   | sum_k s_k t_k u_k / [pi_k A_k] |^{1/2} * prod_k A_k / {zeta_k (zeta_k+psi) pi_k}
// with A_k = psi (psi+u_k) t_k + zeta_k u_k (1+t_k), pi_k = zeta_k+psi+u_k+zeta_k t_k.
inline double log_prior_multi(double psi, const std::vector<double>& zetas,
                              const std::vector<std::array<double, 3>>& channels) {
    if (zetas.size() != channels.size() || zetas.empty())
        throw std::invalid_argument("prior_multi: channel count mismatch");
    double sum = 0.0;
    double log_prod = 0.0;
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        const double zeta = zetas[k];
        detail::check_prior_domain(psi, zeta);
        const double s = channels[k][0], t = channels[k][1], u = channels[k][2];
        const double pi = zeta + psi + u + zeta * t;
        const double quad = detail::prior_quad(psi, zeta, t, u);
        sum += s * t * u / (pi * quad);
        log_prod += std::log(quad) - std::log(zeta) - std::log(zeta + psi) - std::log(pi);
    }
    if (!(sum > 0.0))
        throw std::domain_error("prior_multi: information sum vanished (all totals zero)");
    return 0.5 * std::log(sum) + log_prod;
}

inline double prior_multi(double psi, const std::vector<double>& zetas,
                          const std::vector<std::array<double, 3>>& channels) {
    return std::exp(log_prior_multi(psi, zetas, channels));
}

// The prior as a density on the fitting scale (psi, lam1, lam2, ...):
// zeta_k = exp(lam1_k) with Jacobian prod_k zeta_k, flat in lam2.  Keeps the
// pi(theta_hat)/pi(theta_psi) ratio in q_B coherent with j_ll determinants
// taken on the fitting scale.
inline double log_prior_fitting_scale(const PriorSpec& spec, const ModelParams& params) {
    std::vector<double> zetas(params.nuisance.size());
    double log_jac = 0.0;
    for (std::size_t k = 0; k < zetas.size(); ++k) {
        zetas[k] = params.nuisance[k].zeta();
        log_jac += params.nuisance[k].lam1;
    }
    return log_prior_multi(params.psi, zetas, spec.channel_constants) + log_jac;
}

}  // namespace signalroot
