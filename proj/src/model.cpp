#include "signalroot/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace signalroot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGradTol = 1e-8;        // inf-norm on the lam scale
constexpr double kLamCap = 30.0;         // |lam| clamp against divergence
constexpr double kEdgeMargin = 1e-12;    // keeps exp(lam1) > -psi strictly
constexpr double kPsiSearchCap = 1e7;    // outer search divergence guard
constexpr int kNewtonCap = 200;
constexpr int kCoordSweeps = 50;

struct ChannelPoint {
    double g = 0.0;    // gamma = exp(lam2 - lam1)
    double b = 0.0;    // beta  = exp(lam2)
    double mu1 = 0.0;  // psi*g + b
    double mu2 = 0.0;  // t*b
    double mu3 = 0.0;  // u*g
};

inline bool eval_point(const ChannelData& c, double psi, double lam1, double lam2,
                       ChannelPoint& p) {
    p.g = std::exp(lam2 - lam1);
    p.b = std::exp(lam2);
    p.mu1 = psi * p.g + p.b;
    p.mu2 = c.t * p.b;
    p.mu3 = c.u * p.g;
    return std::isfinite(p.mu1) && p.mu1 > 0.0 && std::isfinite(p.mu2) && std::isfinite(p.mu3);
}

inline double chan_loglik(const ChannelData& c, double psi, double lam1, double lam2) {
    ChannelPoint p;
    if (!eval_point(c, psi, lam1, lam2, p)) return -kInf;
    double ll = c.y2 * lam2 + c.y3 * (lam2 - lam1) - (psi + c.u) * p.g - (1.0 + c.t) * p.b;
    if (c.y1 > 0) ll += c.y1 * std::log(p.mu1);
    return ll;
}

inline void chan_grad(const ChannelData& c, double psi, const ChannelPoint& p,
                      double& g1, double& g2) {
    const double r1 = c.y1 > 0 ? c.y1 / p.mu1 : 0.0;
    g1 = -r1 * psi * p.g - c.y3 + (psi + c.u) * p.g;
    g2 = (c.y1 + c.y2 + c.y3) - (p.mu1 + p.mu2 + p.mu3);
}

inline void chan_hess(const ChannelData& c, double psi, const ChannelPoint& p,
                      double h[2][2]) {
    const double a = psi * p.g;  // mu1 = a + b
    const double y1ab = c.y1 > 0 ? c.y1 * a * p.b / (p.mu1 * p.mu1) : 0.0;
    h[0][0] = y1ab - (psi + c.u) * p.g;
    h[0][1] = (psi + c.u) * p.g;
    h[1][0] = h[0][1];
    h[1][1] = -(p.mu1 + p.mu2 + p.mu3);
}

struct ChannelFit {
    double lam1 = 0.0, lam2 = 0.0;
    double loglik = -kInf;
    bool converged = false;
    bool at_bound = false;
    int iterations = 0;
};

struct Box {
    double lo1, hi1, lo2, hi2;
};

inline Box channel_box(double psi) {
    Box box{-kLamCap, kLamCap, -kLamCap, kLamCap};
    if (psi < 0.0) box.lo1 = std::max(box.lo1, std::log(-psi + kEdgeMargin));
    return box;
}

inline void project(const Box& box, double& lam1, double& lam2) {
    lam1 = std::clamp(lam1, box.lo1, box.hi1);
    lam2 = std::clamp(lam2, box.lo2, box.hi2);
}

// Projected convergence: a component pressed against its active clamp may
// carry a gradient pointing out of the box.
inline bool grad_converged(const Box& box, double lam1, double lam2,
                           double g1, double g2, double tol) {
    const bool ok1 = std::fabs(g1) < tol ||
                     (lam1 <= box.lo1 && g1 < tol) || (lam1 >= box.hi1 && g1 > -tol);
    const bool ok2 = std::fabs(g2) < tol ||
                     (lam2 <= box.lo2 && g2 < tol) || (lam2 >= box.hi2 && g2 > -tol);
    return ok1 && ok2;
}

// Divergent nuisance fits (beta or gamma -> 0 or inf) stall by the lam-scale
// gradient criterion long before the hard clamp; |lam| beyond this is treated
// as the parameter-space edge.  Legitimate fits at counting-data scales stay
// well inside.
constexpr double kSoftBound = 15.0;

inline bool at_any_bound(const Box& box, double lam1, double lam2) {
    return lam1 <= box.lo1 || lam1 >= box.hi1 || lam2 <= box.lo2 || lam2 >= box.hi2 ||
           std::fabs(lam1) >= kSoftBound || std::fabs(lam2) >= kSoftBound;
}

// 1-D damped Newton over one coordinate (the other fixed), with clamping.
// Used inside the degenerate-channel path where the full likelihood has an
// exponentially flat ridge.
double line_maximize(const ChannelData& c, double psi, int coord, double fixed,
                     double x, double lo, double hi) {
    auto value = [&](double v) {
        return coord == 0 ? chan_loglik(c, psi, v, fixed) : chan_loglik(c, psi, fixed, v);
    };
    x = std::clamp(x, lo, hi);
    double fx = value(x);
    for (int it = 0; it < 60; ++it) {
        const double lam1 = coord == 0 ? x : fixed;
        const double lam2 = coord == 0 ? fixed : x;
        ChannelPoint p;
        if (!eval_point(c, psi, lam1, lam2, p)) break;
        double g1, g2;
        chan_grad(c, psi, p, g1, g2);
        double h[2][2];
        chan_hess(c, psi, p, h);
        const double g = coord == 0 ? g1 : g2;
        const double curv = coord == 0 ? h[0][0] : h[1][1];
        if (std::fabs(g) < kGradTol) break;
        if ((x <= lo && g < 0.0) || (x >= hi && g > 0.0)) break;
        double step = curv < 0.0 ? -g / curv : (g > 0.0 ? 1.0 : -1.0);
        step = std::clamp(step, -4.0, 4.0);
        bool moved = false;
        for (int halve = 0; halve < 14; ++halve) {
            const double nx = std::clamp(x + step, lo, hi);
            const double fn = value(nx);
            if (fn > fx) {
                x = nx;
                fx = fn;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) {
            // flat at float resolution; a tiny full Newton step still clears
            // the remaining gradient
            const double full = curv < 0.0 ? -g / curv : 0.0;
            const double nx = std::clamp(x + full, lo, hi);
            if (full != 0.0 && std::fabs(full) < 1e-6 && value(nx) >= fx - 1e-10) {
                x = nx;
                fx = value(nx);
                continue;
            }
            break;
        }
    }
    return x;
}

// Channels with y2 = 0 or y3 = 0: the supremum may sit at beta -> 0 or
// gamma -> 0, an exponentially flat ridge where joint Newton cannot march.
// Profile the divergent coordinate by golden section (inner 1-D fits), then
// let the regular Newton polish from there.
struct RidgeStart {
    double lam1, lam2;
};

RidgeStart ridge_profile_start(const ChannelData& c, double psi, const Box& box, int outer) {
    const double out_lo = outer == 1 ? box.lo2 : box.lo1;
    const double out_hi = outer == 1 ? box.hi2 : box.hi1;
    const double in_lo = outer == 1 ? box.lo1 : box.lo2;
    const double in_hi = outer == 1 ? box.hi1 : box.hi2;

    const Nuisance start = detail::moment_start(c);
    double inner_warm = outer == 1 ? start.lam1 : start.lam2;
    inner_warm = std::clamp(inner_warm, in_lo, in_hi);

    auto profile = [&](double out_value) {
        inner_warm = line_maximize(c, psi, outer == 1 ? 0 : 1, out_value,
                                   inner_warm, in_lo, in_hi);
        return outer == 1 ? chan_loglik(c, psi, inner_warm, out_value)
                          : chan_loglik(c, psi, out_value, inner_warm);
    };

    const double gr = 0.6180339887498949;
    double a = out_lo, b = out_hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = profile(x1), f2 = profile(x2);
    for (int it = 0; it < 90; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2; f1 = f2;
            x2 = a + gr * (b - a);
            f2 = profile(x2);
        } else {
            b = x2;
            x2 = x1; f2 = f1;
            x1 = b - gr * (b - a);
            f1 = profile(x1);
        }
        if (b - a < 1e-10 * std::max(1.0, std::fabs(a))) break;
    }
    double out_best = f1 >= f2 ? x1 : x2;
    double f_best = profile(out_best);
    double inner_best = inner_warm;

    // a divergent coordinate leaves the profile flat all the way down; pin it
    // at the clamp so the projected-gradient criterion applies exactly
    const double f_edge = profile(out_lo);
    if (f_edge >= f_best - 1e-9) {
        out_best = out_lo;
        inner_best = inner_warm;
    }
    return outer == 1 ? RidgeStart{inner_best, out_best} : RidgeStart{out_best, inner_best};
}

ChannelFit newton_from(const ChannelData& c, double psi, const Box& box,
                       double lam1, double lam2) {
    project(box, lam1, lam2);

    ChannelFit fit;
    double ll = chan_loglik(c, psi, lam1, lam2);
    if (!std::isfinite(ll)) {
        // nudge off the infeasible start
        lam1 = std::min(box.hi1, box.lo1 + 0.5);
        lam2 = 0.0;
        ll = chan_loglik(c, psi, lam1, lam2);
    }

    int it = 0;
    for (; it < kNewtonCap; ++it) {
        ChannelPoint p;
        if (!eval_point(c, psi, lam1, lam2, p)) break;
        double g1, g2;
        chan_grad(c, psi, p, g1, g2);
        if (grad_converged(box, lam1, lam2, g1, g2, kGradTol)) {
            fit.converged = true;
            break;
        }

        double h[2][2];
        chan_hess(c, psi, p, h);

        // active-set reduction: a coordinate pressed against its clamp by
        // the gradient is frozen and Newton runs on the free coordinate
        const bool active1 = (lam1 <= box.lo1 && g1 < 0.0) || (lam1 >= box.hi1 && g1 > 0.0);
        const bool active2 = (lam2 <= box.lo2 && g2 < 0.0) || (lam2 >= box.hi2 && g2 > 0.0);

        double step[2] = {0.0, 0.0};
        bool have_newton = false;
        if (active1 && !active2) {
            step[1] = h[1][1] < 0.0 ? -g2 / h[1][1] : (g2 > 0 ? 1.0 : -1.0);
            have_newton = h[1][1] < 0.0;
        } else if (active2 && !active1) {
            step[0] = h[0][0] < 0.0 ? -g1 / h[0][0] : (g1 > 0 ? 1.0 : -1.0);
            have_newton = h[0][0] < 0.0;
        } else if (!active1 && !active2) {
            const double neg_g[2] = {-g1, -g2};
            have_newton = solve2x2(h, neg_g, step);
            // keep only ascent directions from a negative-definite Hessian
            if (have_newton && !(h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0))
                have_newton = (step[0] * g1 + step[1] * g2 > 0.0);
            if (!have_newton) {
                const double gn = std::max(std::fabs(g1), std::fabs(g2));
                step[0] = g1 / gn;
                step[1] = g2 / gn;
            }
        }

        double scale = 1.0;
        bool improved = false;
        for (int halve = 0; halve < 12; ++halve) {
            double n1 = lam1 + scale * step[0];
            double n2 = lam2 + scale * step[1];
            project(box, n1, n2);
            const double nll = chan_loglik(c, psi, n1, n2);
            if (nll > ll) {
                lam1 = n1;
                lam2 = n2;
                ll = nll;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) {
            // the objective is flat at float resolution; a tiny full Newton
            // step still fixes the remaining gradient
            double n1 = lam1 + step[0];
            double n2 = lam2 + step[1];
            project(box, n1, n2);
            const double nll = chan_loglik(c, psi, n1, n2);
            const double step_norm = std::max(std::fabs(step[0]), std::fabs(step[1]));
            if (have_newton && step_norm < 1e-6 && nll >= ll - 1e-10) {
                lam1 = n1;
                lam2 = n2;
                ll = nll;
                continue;
            }
            break;
        }
    }

    if (!fit.converged) {
        // coordinate ascent rescue: 1-D Newton with halving, per coordinate
        for (int sweep = 0; sweep < kCoordSweeps && !fit.converged; ++sweep) {
            for (int coord = 0; coord < 2; ++coord) {
                ChannelPoint p;
                if (!eval_point(c, psi, lam1, lam2, p)) break;
                double g1, g2;
                chan_grad(c, psi, p, g1, g2);
                double h[2][2];
                chan_hess(c, psi, p, h);
                const double g = coord == 0 ? g1 : g2;
                const double hdiag = coord == 0 ? h[0][0] : h[1][1];
                double delta = hdiag < 0.0 ? -g / hdiag : (g > 0 ? 0.5 : -0.5);
                delta = std::clamp(delta, -2.0, 2.0);
                for (int halve = 0; halve < 12; ++halve) {
                    double n1 = lam1 + (coord == 0 ? delta : 0.0);
                    double n2 = lam2 + (coord == 1 ? delta : 0.0);
                    project(box, n1, n2);
                    const double nll = chan_loglik(c, psi, n1, n2);
                    if (nll > ll) {
                        lam1 = n1;
                        lam2 = n2;
                        ll = nll;
                        break;
                    }
                    delta *= 0.5;
                }
            }
            ChannelPoint p;
            if (eval_point(c, psi, lam1, lam2, p)) {
                double g1, g2;
                chan_grad(c, psi, p, g1, g2);
                fit.converged = grad_converged(box, lam1, lam2, g1, g2, kGradTol);
            }
            ++it;
        }
    }

    fit.lam1 = lam1;
    fit.lam2 = lam2;
    fit.loglik = ll;
    fit.iterations = it;
    fit.at_bound = at_any_bound(box, lam1, lam2);
    return fit;
}

ChannelFit fit_channel(const ChannelData& c, double psi, double lam1, double lam2) {
    const Box box = channel_box(psi);
    if (c.y2 == 0 || c.y3 == 0) {
        // beta or gamma may vanish: start from the ridge profile directly
        const RidgeStart ridge = ridge_profile_start(c, psi, box, c.y2 == 0 ? 1 : 0);
        lam1 = ridge.lam1;
        lam2 = ridge.lam2;
    }
    ChannelFit fit = newton_from(c, psi, box, lam1, lam2);
    // rescue: restart from a golden-section ridge profile over either
    // coordinate (handles optima pressed against the psi constraint)
    for (int outer : {0, 1}) {
        if (fit.converged) break;
        const RidgeStart alt = ridge_profile_start(c, psi, box, outer);
        const ChannelFit retry = newton_from(c, psi, box, alt.lam1, alt.lam2);
        if (retry.converged || retry.loglik > fit.loglik) fit = retry;
    }
    return fit;
}

}  // namespace

void Dataset::validate() const {
    if (channels.empty()) throw std::invalid_argument("dataset: at least one channel required");
    for (std::size_t k = 0; k < channels.size(); ++k) {
        const auto& c = channels[k];
        if (c.y1 < 0 || c.y2 < 0 || c.y3 < 0)
            throw std::invalid_argument("dataset: negative count in channel " + std::to_string(k + 1));
        if (!(c.t > 0.0) || !(c.u > 0.0))
            throw std::invalid_argument("dataset: t and u must be positive in channel " + std::to_string(k + 1));
    }
}

double Nuisance::beta() const { return std::exp(lam2); }
double Nuisance::gamma() const { return std::exp(lam2 - lam1); }
double Nuisance::zeta() const { return std::exp(lam1); }

bool ModelParams::in_domain() const {
    for (const auto& nu : nuisance)
        if (!(std::exp(nu.lam1) > -psi)) return false;
    return true;
}

std::vector<double> ModelParams::to_vector() const {
    std::vector<double> v;
    v.reserve(dim());
    v.push_back(psi);
    for (const auto& nu : nuisance) {
        v.push_back(nu.lam1);
        v.push_back(nu.lam2);
    }
    return v;
}

ModelParams ModelParams::from_vector(const std::vector<double>& v) {
    if (v.empty() || v.size() % 2 == 0)
        throw std::invalid_argument("ModelParams: vector length must be odd (2n+1)");
    ModelParams p;
    p.psi = v[0];
    p.nuisance.resize((v.size() - 1) / 2);
    for (std::size_t k = 0; k < p.nuisance.size(); ++k) {
        p.nuisance[k].lam1 = v[1 + 2 * k];
        p.nuisance[k].lam2 = v[2 + 2 * k];
    }
    return p;
}

double log_likelihood_unchecked(const Dataset& data, const ModelParams& params) noexcept {
    if (params.nuisance.size() != data.size()) return -kInf;
    double ll = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        ll += chan_loglik(data.channels[k], params.psi,
                          params.nuisance[k].lam1, params.nuisance[k].lam2);
        if (!std::isfinite(ll)) return -kInf;
    }
    return ll;
}

double log_likelihood(const Dataset& data, const ModelParams& params) {
    data.validate();
    if (params.nuisance.size() != data.size())
        throw std::invalid_argument("log_likelihood: parameter/channel count mismatch");
    const double ll = log_likelihood_unchecked(data, params);
    if (!std::isfinite(ll))
        throw std::domain_error("log_likelihood: parameters outside the model space (some mean <= 0)");
    return ll;
}

std::vector<double> score(const Dataset& data, const ModelParams& params) {
    std::vector<double> g(params.dim(), 0.0);
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto& c = data.channels[k];
        ChannelPoint p;
        if (!eval_point(c, params.psi, params.nuisance[k].lam1, params.nuisance[k].lam2, p))
            throw std::domain_error("score: parameters outside the model space");
        const double r1 = c.y1 > 0 ? c.y1 / p.mu1 : 0.0;
        g[0] += (r1 - 1.0) * p.g;
        double g1, g2;
        chan_grad(c, params.psi, p, g1, g2);
        g[1 + 2 * k] = g1;
        g[2 + 2 * k] = g2;
    }
    return g;
}

ModelParams saturated_mle_single(const ChannelData& c) {
    if (c.y2 == 0 || c.y3 == 0)
        throw boundary_error("saturated_mle_single: y2 or y3 is zero, closed form undefined");
    const double beta = static_cast<double>(c.y2) / c.t;
    const double gamma = static_cast<double>(c.y3) / c.u;
    ModelParams p;
    p.psi = (static_cast<double>(c.y1) - beta) / gamma;
    p.nuisance.push_back({std::log(beta) - std::log(gamma), std::log(beta)});
    return p;
}

namespace detail {

Nuisance moment_start(const ChannelData& c) {
    const double beta = std::max(static_cast<double>(c.y2), 0.5) / c.t;
    const double gamma = std::max(static_cast<double>(c.y3), 0.5) / c.u;
    return {std::log(beta) - std::log(gamma), std::log(beta)};
}

double moment_start_psi(const Dataset& data) {
    double num = 0.0, den = 0.0;
    for (const auto& c : data.channels) {
        if (c.y3 == 0) continue;
        const double gamma = static_cast<double>(c.y3) / c.u;
        const double beta = static_cast<double>(c.y2) / c.t;
        const double w = gamma * gamma / std::max(static_cast<double>(c.y1), 0.5);
        num += w * (static_cast<double>(c.y1) - beta) / gamma;
        den += w;
    }
    return den > 0.0 ? num / den : 0.0;
}

double fd_step(double x) {
    static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
    return h0 * std::max(1.0, std::fabs(x));
}

double fd_step2(double x) {
    static const double h0 =
        std::pow(std::numeric_limits<double>::epsilon(), 0.25);
    return h0 * std::max(1.0, std::fabs(x));
}

}  // namespace detail

FitResult constrained_mle(const Dataset& data, double psi,
                          const std::optional<ModelParams>& init) {
    data.validate();
    if (init && init->nuisance.size() != data.size())
        throw std::invalid_argument("constrained_mle: init has wrong channel count");

    FitResult out;
    out.params.psi = psi;
    out.params.nuisance.resize(data.size());
    out.converged = true;
    out.loglik = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        const Nuisance start = init ? init->nuisance[k] : detail::moment_start(data.channels[k]);
        const ChannelFit fit = fit_channel(data.channels[k], psi, start.lam1, start.lam2);
        out.params.nuisance[k] = {fit.lam1, fit.lam2};
        out.loglik += fit.loglik;
        out.converged = out.converged && fit.converged;
        out.boundary = out.boundary || fit.at_bound;
        out.iterations = std::max(out.iterations, fit.iterations);
    }
    if (!out.converged)
        throw fit_error("constrained_mle: inner fit did not converge at psi=" + std::to_string(psi), out);
    return out;
}

FitResult global_mle(const Dataset& data) {
    data.validate();
    bool any_y3 = false;
    for (const auto& c : data.channels) any_y3 = any_y3 || c.y3 > 0;
    if (!any_y3)
        throw boundary_error("global_mle: every channel has y3=0, gamma (and psi) unidentified");

    ModelParams warm;
    auto profile = [&](double psi) -> double {
        FitResult f = constrained_mle(data, psi, warm.nuisance.empty()
                                                     ? std::optional<ModelParams>{}
                                                     : std::optional<ModelParams>{warm});
        warm = f.params;
        return f.loglik;
    };

    // bracket a maximum of the profile, expanding from the moment start
    double m = detail::moment_start_psi(data);
    double h = std::max(1.0, 0.25 * std::fabs(m));
    double fm = profile(m);
    double a = m - h, b = m + h;
    double fa = profile(a), fb = profile(b);
    int expansions = 0;
    while (!(fm >= fa && fm >= fb)) {
        if (++expansions > 80 || std::fabs(m) > kPsiSearchCap) {
            FitResult best = constrained_mle(data, m, warm);
            best.converged = false;
            best.boundary = true;
            throw fit_error("global_mle: psi search diverged (profile has no interior maximum)", best);
        }
        h *= 1.9;
        if (fa > fm) {
            b = m; fb = fm;
            m = a; fm = fa;
            a = m - h; fa = profile(a);
        } else {
            a = m; fa = fm;
            m = b; fm = fb;
            b = m + h; fb = profile(b);
        }
    }

    // Brent minimization of the negated profile on [a, b]
    auto neg_profile = [&](double psi) { return -profile(psi); };
    const double gold = 0.3819660112501051;
    double x = m, w = m, v = m;
    double fx = -fm, fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int iter = 0; iter < 120; ++iter) {
        const double mid = 0.5 * (a + b);
        const double tol1 = 1e-8 * std::fabs(x) + 1e-10;
        const double tol2 = 2.0 * tol1;
        if (std::fabs(x - mid) <= tol2 - 0.5 * (b - a)) break;
        bool parabolic = false;
        if (std::fabs(e) > tol1) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::fabs(q);
            const double etemp = e;
            e = d;
            if (std::fabs(p) < std::fabs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
                parabolic = true;
                d = p / q;
            }
        }
        if (!parabolic) {
            e = (x >= mid) ? a - x : b - x;
            d = gold * e;
        }
        const double upt = std::fabs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = neg_profile(upt);
        if (fu <= fx) {
            if (upt >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = upt; fx = fu;
        } else {
            if (upt < x) a = upt; else b = upt;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = upt; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = upt; fv = fu;
            }
        }
    }

    FitResult out = constrained_mle(data, x, warm);

    // interior fits: sharpen psi_hat with a couple of safeguarded Newton
    // steps on the profile score (envelope identity, valid off the clamps)
    if (!out.boundary) {
        double psi = out.params.psi;
        for (int polish = 0; polish < 3; ++polish) {
            const auto g = score(data, out.params);
            const double s0 = g[0];
            if (std::fabs(s0) < 1e-11) break;
            const double dh = 1e-5 * std::max(1.0, std::fabs(psi));
            const FitResult up = constrained_mle(data, psi + dh, out.params);
            const FitResult dn = constrained_mle(data, psi - dh, out.params);
            const double sp = score(data, up.params)[0];
            const double sm = score(data, dn.params)[0];
            const double deriv = (sp - sm) / (2.0 * dh);
            if (!(deriv < 0.0)) break;
            double next = psi - s0 / deriv;
            if (!std::isfinite(next) || std::fabs(next - psi) > h) break;
            const FitResult cand = constrained_mle(data, next, out.params);
            if (cand.loglik + 1e-12 < out.loglik) break;
            out = cand;
            psi = next;
        }
    }
    return out;
}

namespace {

Matrix fd_information(const Dataset& data, const ModelParams& params,
                      std::size_t offset, std::size_t m) {
    std::vector<double> theta = params.to_vector();
    auto f = [&](const std::vector<double>& v) {
        const double ll = log_likelihood_unchecked(data, ModelParams::from_vector(v));
        if (!std::isfinite(ll))
            throw std::domain_error("observed_information: finite-difference step crossed the parameter-space boundary");
        return ll;
    };

    const double f0 = f(theta);
    Matrix info(m, m);
    std::vector<double> h(m);
    // eps^{1/4} scaling: optimal for second central differences; the
    // eps^{1/3} first-derivative step leaves determinant-level noise that
    // visibly corrupts q near its removable singularity
    for (std::size_t i = 0; i < m; ++i) h[i] = detail::fd_step2(theta[offset + i]);

    for (std::size_t i = 0; i < m; ++i) {
        auto at = [&](double di) {
            std::vector<double> v = theta;
            v[offset + i] += di;
            return f(v);
        };
        info(i, i) = -(at(h[i]) - 2.0 * f0 + at(-h[i])) / (h[i] * h[i]);
        for (std::size_t j = i + 1; j < m; ++j) {
            auto at2 = [&](double di, double dj) {
                std::vector<double> v = theta;
                v[offset + i] += di;
                v[offset + j] += dj;
                return f(v);
            };
            const double mixed = (at2(h[i], h[j]) - at2(h[i], -h[j]) -
                                  at2(-h[i], h[j]) + at2(-h[i], -h[j])) /
                                 (4.0 * h[i] * h[j]);
            info(i, j) = -mixed;
            info(j, i) = -mixed;
        }
    }
    return info;
}

}  // namespace

Matrix observed_information(const Dataset& data, const ModelParams& params) {
    return fd_information(data, params, 0, params.dim());
}

Matrix observed_information_lambda(const Dataset& data, const ModelParams& params) {
    return fd_information(data, params, 1, params.dim() - 1);
}

double profile_information(const Dataset& data, const FitResult& fit) {
    const Matrix j = observed_information(data, fit.params);
    const LogDet full = lu_logdet(j);
    const LogDet corner = lu_logdet(j.block(1, 1, j.rows() - 1, j.cols() - 1));
    if (full.sign <= 0 || corner.sign <= 0)
        throw boundary_error("profile_information: observed information is not positive definite");
    return std::exp(full.log_abs - corner.log_abs);
}

double wald_pivot(const Dataset& data, const FitResult& fit, double psi0) {
    return std::sqrt(profile_information(data, fit)) * (fit.params.psi - psi0);
}

}  // namespace signalroot
