#pragma once

#include "signalroot/linalg.hpp"
#include "signalroot/types.hpp"

namespace signalroot {

// Canonical parameter phi(theta) of the local exponential family
// approximation, of length d = 2n+1.  The MLE-side coefficients
// (gamma_hat_k, beta_hat_k, psi_hat) are frozen at `mle` for the whole
// significance-function trace; only `at` varies.
//
// Components, with L_k = log(psi e^{lam2_k - lam1_k} + e^{lam2_k}):
//   phi[0]      = sum_k gamma_hat_k L_k
//   phi[1+2k]   = psi_hat gamma_hat_k L_k + u_k (lam2_k - lam1_k) gamma_hat_k
//   phi[2+2k]   = beta_hat_k L_k + t_k lam2_k beta_hat_k
// Any affine transformation of phi yields the same correction q.
struct CanonicalParam {
    std::vector<double> phi;
    Matrix jacobian;  // d x d, d phi / d theta^T, central differences
    bool has_jacobian = false;
};

CanonicalParam canonical_phi(const Dataset& data, const ModelParams& at,
                             const ModelParams& mle, bool want_jacobian = false);

}  // namespace signalroot
