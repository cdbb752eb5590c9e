#include "signalroot/canonical.hpp"

#include <cmath>

#include "signalroot/model.hpp"

namespace signalroot {

namespace {

std::vector<double> phi_vector(const Dataset& data, const ModelParams& at,
                               const ModelParams& mle) {
    const std::size_t n = data.size();
    std::vector<double> phi(2 * n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double ghat = mle.nuisance[k].gamma();
        const double bhat = mle.nuisance[k].beta();
        const double g = at.nuisance[k].gamma();
        const double b = at.nuisance[k].beta();
        const double mu1 = at.psi * g + b;
        if (!(mu1 > 0.0) || !std::isfinite(mu1))
            throw std::domain_error("canonical_phi: log of non-positive mean (psi outside the extended space)");
        const double lk = std::log(mu1);
        const double lam1 = at.nuisance[k].lam1;
        const double lam2 = at.nuisance[k].lam2;
        phi[0] += ghat * lk;
        phi[1 + 2 * k] = mle.psi * ghat * lk + data.channels[k].u * (lam2 - lam1) * ghat;
        phi[2 + 2 * k] = bhat * lk + data.channels[k].t * lam2 * bhat;
    }
    return phi;
}

}  // namespace

CanonicalParam canonical_phi(const Dataset& data, const ModelParams& at,
                             const ModelParams& mle, bool want_jacobian) {
    if (at.nuisance.size() != data.size() || mle.nuisance.size() != data.size())
        throw std::invalid_argument("canonical_phi: parameter/channel count mismatch");

    CanonicalParam out;
    out.phi = phi_vector(data, at, mle);
    if (!want_jacobian) return out;

    const std::size_t d = at.dim();
    std::vector<double> theta = at.to_vector();
    out.jacobian = Matrix(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        const double h = detail::fd_step(theta[j]);
        std::vector<double> tp = theta, tm = theta;
        tp[j] += h;
        tm[j] -= h;
        const auto fp = phi_vector(data, ModelParams::from_vector(tp), mle);
        const auto fm = phi_vector(data, ModelParams::from_vector(tm), mle);
        for (std::size_t i = 0; i < d; ++i)
            out.jacobian(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    }
    out.has_jacobian = true;
    return out;
}

}  // namespace signalroot
