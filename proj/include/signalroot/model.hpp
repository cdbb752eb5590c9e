#pragma once

#include <optional>

#include "signalroot/linalg.hpp"
#include "signalroot/types.hpp"

namespace signalroot {

// Multi-channel Poisson signal-plus-background model on the fitting scale
// theta = (psi, lam1_1, lam2_1, ..., lam1_n, lam2_n).  Channel k contributes
//   alpha_k(theta) . y_k - c_k(theta)
// with
//   alpha_k = ( log(psi e^{lam2-lam1} + e^{lam2}), lam2, lam2 - lam1 ),
//   c_k     = (psi + u_k) e^{lam2-lam1} + (1 + t_k) e^{lam2},
// i.e. the Poisson log likelihood with the count-only constants dropped.

// Log likelihood; throws std::domain_error when params leave the parameter
// space (a non-finite value is never returned silently).
double log_likelihood(const Dataset& data, const ModelParams& params);

// Same, but returns -inf on domain violations.  Used inside optimizers.
double log_likelihood_unchecked(const Dataset& data, const ModelParams& params) noexcept;

// Analytic score (gradient of the log likelihood) in theta order.
std::vector<double> score(const Dataset& data, const ModelParams& params);

// Closed-form single-channel MLE (observations equal parameters in number):
//   beta = y2/t, gamma = y3/u, psi = (y1 - beta)/gamma.
// Throws boundary_error when y2 == 0 or y3 == 0 (the lam transform is
// undefined); callers fall back to the numerical fit.  With y1 == 0 the
// returned point lies on the closure of the extended space (mu1 = 0).
ModelParams saturated_mle_single(const ChannelData& channel);

// Nuisance fit at fixed psi.  Channels share only psi, so this decomposes
// into n independent 2-parameter maximizations (damped Newton, coordinate
// ascent fallback).  loglik is the profile log likelihood at psi.
// Throws fit_error (carrying the best iterate) on non-convergence; a clamp
// hit is reported through FitResult::boundary, not as an error.
FitResult constrained_mle(const Dataset& data, double psi,
                          const std::optional<ModelParams>& init = std::nullopt);

// Global MLE: outer 1-D maximization of the profile log likelihood over psi
// with inner constrained fits, bracketing from a moment start.
// Throws boundary_error when gamma is unidentified (every channel y3 == 0)
// and fit_error when the outer search diverges.
FitResult global_mle(const Dataset& data);

// Observed information j(theta) = -d2 l / dtheta dtheta^T by central finite
// differences, symmetric by construction.  Step underflow or a boundary
// crossing raises std::domain_error.
Matrix observed_information(const Dataset& data, const ModelParams& params);

// The (lambda,lambda) corner of j, differentiating over the 2n nuisance
// coordinates only.
Matrix observed_information_lambda(const Dataset& data, const ModelParams& params);

// Profile information j_p(psi_hat) = |j(theta_hat)| / |j_ll(theta_hat)|,
// strictly positive at an interior maximum.  `fit` must be the global MLE.
double profile_information(const Dataset& data, const FitResult& fit);

// First-order Wald pivot t(psi0) = j_p(psi_hat)^{1/2} (psi_hat - psi0).
// Diagnostic only; not an inference route.
double wald_pivot(const Dataset& data, const FitResult& fit, double psi0);

namespace detail {

// Moment start for the nuisance pair of one channel (pseudo-count 0.5 keeps
// the start finite for zero counts; the likelihood itself is untouched).
Nuisance moment_start(const ChannelData& c);

// Moment start for psi, information-weighted across channels.
double moment_start_psi(const Dataset& data);

// step for first central differences, eps^{1/3} max(1,|x|)
double fd_step(double x);
// step for second central differences, eps^{1/4} max(1,|x|)
double fd_step2(double x);

}  // namespace detail

}  // namespace signalroot
