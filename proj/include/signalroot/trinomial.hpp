#pragma once

#include <cmath>
#include <stdexcept>

#include "signalroot/linalg.hpp"
#include "signalroot/types.hpp"

namespace signalroot {

// One channel conditioned on its total s = y1+y2+y3: a trinomial with cell
// probabilities ((psi+zeta)/pi, t*zeta/pi, u/pi), pi = psi+zeta+u+zeta*t,
// in the (psi, zeta = beta/gamma) parametrization.  gamma drops out of the
// conditional model.
struct TrinomialChannel {
    long long y1 = 0, y2 = 0, y3 = 0;
    double psi = 0.0;
    double zeta = 1.0;
    double t = 1.0, u = 1.0;

    long long s() const { return y1 + y2 + y3; }

    void validate() const {
        if (y1 < 0 || y2 < 0 || y3 < 0)
            throw std::invalid_argument("trinomial: negative count");
        if (!(t > 0.0) || !(u > 0.0))
            throw std::invalid_argument("trinomial: t and u must be positive");
        if (!(zeta > 0.0) || !(psi + zeta > 0.0))
            throw std::domain_error("trinomial: requires zeta > 0 and psi + zeta > 0");
    }
};

// Conditional log likelihood, additive constants dropped:
//   y1 log(psi+zeta) + y2 log zeta - s log(psi+zeta+u+zeta t)
inline double trinomial_loglik(const TrinomialChannel& ch) {
    ch.validate();
    const double pi = ch.psi + ch.zeta + ch.u + ch.zeta * ch.t;
    return ch.y1 * std::log(ch.psi + ch.zeta) + ch.y2 * std::log(ch.zeta) -
           static_cast<double>(ch.s()) * std::log(pi);
}

// Fisher information of the trinomial model in (psi, zeta):
//   s / {pi^2 (zeta+psi)} * [ u+zeta t        u-psi t
//                             u-psi t         {psi t(psi+u)+zeta u(1+t)}/zeta ]
inline Matrix trinomial_fisher(const TrinomialChannel& ch) {
    ch.validate();
    const double pi = ch.psi + ch.zeta + ch.u + ch.zeta * ch.t;
    const double front = static_cast<double>(ch.s()) / (pi * pi * (ch.zeta + ch.psi));
    Matrix info(2, 2);
    info(0, 0) = front * (ch.u + ch.zeta * ch.t);
    info(0, 1) = front * (ch.u - ch.psi * ch.t);
    info(1, 0) = info(0, 1);
    info(1, 1) = front * (ch.psi * ch.t * (ch.psi + ch.u) + ch.zeta * ch.u * (1.0 + ch.t)) / ch.zeta;
    return info;
}

// Nuisance parameter orthogonal to psi; level sets of xi solve
//   d zeta / d psi = zeta (psi t - u) / {psi t (psi+u) + zeta u (1+t)}.
inline double orthogonal_xi(double psi, double zeta, double t, double u) {
    if (!(zeta > 0.0) || !(psi + zeta > 0.0))
        throw std::domain_error("orthogonal_xi: requires zeta > 0 and psi + zeta > 0");
    const double pi = psi + zeta + u + zeta * t;
    return t * std::log(zeta) + std::log(zeta + psi) - (1.0 + t) * std::log(pi);
}

}  // namespace signalroot
