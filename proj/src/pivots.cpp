#include "signalroot/pivots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace signalroot {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRadicandTol = 1e-8;
// q/r sign disagreement beyond this |r| is numerical breakdown, not noise
constexpr double kSignBreakdownR = 0.5;

double signed_root(double psi_hat, double ll_hat, double psi, double ll_psi) {
    double radicand = 2.0 * (ll_hat - ll_psi);
    if (radicand < 0.0) {
        if (radicand < -kRadicandTol)
            throw std::domain_error(
                "likelihood_root: constrained fit beat the global optimum; refit the global MLE");
        radicand = 0.0;
    }
    const double root = std::sqrt(radicand);
    if (psi_hat > psi) return root;
    if (psi_hat < psi) return -root;
    return 0.0;
}

double cubic_interp(const std::array<double, 4>& xs, const std::array<double, 4>& ys, double x) {
    double out = 0.0;
    for (int i = 0; i < 4; ++i) {
        double term = ys[i];
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            term *= (x - xs[j]) / (xs[i] - xs[j]);
        }
        out += term;
    }
    return out;
}

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::r: return "r";
        case Method::rstar: return "rstar";
        case Method::rstar_bayes: return "rstar_bayes";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "r") return Method::r;
    if (name == "rstar") return Method::rstar;
    if (name == "rstar_bayes" || name == "bayes") return Method::rstar_bayes;
    return std::nullopt;
}

double likelihood_root(const Dataset& data, double psi, const FitResult& mle,
                       const FitResult& constrained) {
    (void)data;
    return signed_root(mle.params.psi, mle.loglik, psi, constrained.loglik);
}

double q_generic(const Dataset& data, const FitResult& mle,
                 const FitResult& constrained, const PhiFn& phi) {
    const std::size_t d = mle.params.dim();

    const std::vector<double> phi_hat = phi(mle.params);
    const std::vector<double> phi_psi = phi(constrained.params);
    if (phi_hat.size() != d || phi_psi.size() != d)
        throw std::invalid_argument("q_generic: phi must have dimension 2n+1");

    auto jacobian = [&](const ModelParams& at) {
        std::vector<double> theta = at.to_vector();
        Matrix jac(d, d);
        for (std::size_t j = 0; j < d; ++j) {
            const double h = detail::fd_step(theta[j]);
            std::vector<double> tp = theta, tm = theta;
            tp[j] += h;
            tm[j] -= h;
            const auto fp = phi(ModelParams::from_vector(tp));
            const auto fm = phi(ModelParams::from_vector(tm));
            for (std::size_t i = 0; i < d; ++i)
                jac(i, j) = (fp[i] - fm[i]) / (2.0 * h);
        }
        return jac;
    };

    const Matrix phi_theta_hat = jacobian(mle.params);
    const Matrix phi_jac_psi = jacobian(constrained.params);

    Matrix num(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        num(i, 0) = phi_hat[i] - phi_psi[i];
        for (std::size_t j = 1; j < d; ++j) num(i, j) = phi_jac_psi(i, j);
    }

    const LogDet ld_num = lu_logdet(num);
    const LogDet ld_den = lu_logdet(phi_theta_hat);
    if (ld_den.sign == 0)
        throw boundary_error("q: phi_theta is singular at the MLE");

    const LogDet ld_j = lu_logdet(observed_information(data, mle.params));
    const LogDet ld_jlam = lu_logdet(observed_information_lambda(data, constrained.params));
    if (ld_j.sign <= 0 || ld_jlam.sign <= 0)
        throw boundary_error("q: observed information not positive definite");
    if (ld_num.sign == 0) return 0.0;

    return ld_num.sign * ld_den.sign *
           std::exp(ld_num.log_abs - ld_den.log_abs + 0.5 * (ld_j.log_abs - ld_jlam.log_abs));
}

double q_stat(const Dataset& data, double psi, const FitResult& mle,
              const FitResult& constrained) {
    (void)psi;
    return q_generic(data, mle, constrained, [&](const ModelParams& at) {
        return canonical_phi(data, at, mle.params).phi;
    });
}

// ---------------------------------------------------------------------------
// PivotEngine

PivotEngine::PivotEngine(Dataset data, FitResult mle)
    : data_(std::move(data)), mle_(std::move(mle)), prior_(PriorSpec::for_dataset(data_)) {
    if (mle_.boundary) return;  // first-order only

    try {
        const Matrix j = observed_information(data_, mle_.params);
        ld_j_ = lu_logdet(j);
        ld_jlam_hat_ = lu_logdet(j.block(1, 1, j.rows() - 1, j.cols() - 1));
        if (ld_j_.sign <= 0 || ld_jlam_hat_.sign <= 0) return;
        jp_ = std::exp(ld_j_.log_abs - ld_jlam_hat_.log_abs);
        sd_ = 1.0 / std::sqrt(jp_);

        const CanonicalParam cp = canonical_phi(data_, mle_.params, mle_.params, true);
        phi_hat_ = cp.phi;
        ld_phi_theta_ = lu_logdet(cp.jacobian);
        if (ld_phi_theta_.sign == 0) return;
        ho_ok_ = true;
    } catch (const std::exception&) {
        ho_ok_ = false;
        return;
    }

    try {
        log_prior_hat_ = log_prior_fitting_scale(prior_, mle_.params);
        bayes_ok_ = std::isfinite(log_prior_hat_);
    } catch (const std::exception&) {
        bayes_ok_ = false;
    }
}

PivotEngine::PivotEngine(const Dataset& data) : PivotEngine(data, global_mle(data)) {}

PivotEngine::Point PivotEngine::point_at(double psi) const {
    return point_at(psi, mle_.params);
}

PivotEngine::Point PivotEngine::point_at_cold(double psi) const {
    Point pt;
    pt.psi = psi;
    pt.fit = constrained_mle(data_, psi);
    pt.r = signed_root(mle_.params.psi, mle_.loglik, psi, pt.fit.loglik);
    return pt;
}

PivotEngine::Point PivotEngine::point_at(double psi, const ModelParams& warm) const {
    Point pt;
    pt.psi = psi;
    pt.fit = constrained_mle(data_, psi, warm);
    pt.r = signed_root(mle_.params.psi, mle_.loglik, psi, pt.fit.loglik);
    return pt;
}

double PivotEngine::q_at(Point& pt) const {
    if (pt.q) return *pt.q;
    double q = kNaN;
    if (ho_ok_ && !pt.fit.boundary) {
        try {
            const CanonicalParam cp = canonical_phi(data_, pt.fit.params, mle_.params, true);
            const std::size_t d = mle_.params.dim();
            Matrix num(d, d);
            for (std::size_t i = 0; i < d; ++i) {
                num(i, 0) = phi_hat_[i] - cp.phi[i];
                for (std::size_t j = 1; j < d; ++j) num(i, j) = cp.jacobian(i, j);
            }
            const LogDet ld_num = lu_logdet(num);
            if (!pt.ld_jlam) {
                const LogDet ld = lu_logdet(observed_information_lambda(data_, pt.fit.params));
                pt.ld_jlam = ld.sign > 0 ? ld.log_abs : kNaN;
            }
            if (std::isfinite(*pt.ld_jlam)) {
                if (ld_num.sign == 0) {
                    q = 0.0;
                } else {
                    q = ld_num.sign * ld_phi_theta_.sign *
                        std::exp(ld_num.log_abs - ld_phi_theta_.log_abs +
                                 0.5 * (ld_j_.log_abs - *pt.ld_jlam));
                }
            }
        } catch (const std::exception&) {
            q = kNaN;
        }
    }
    pt.q = q;
    return q;
}

double PivotEngine::q_bayes_at(Point& pt) const {
    if (pt.q_b) return *pt.q_b;
    double qb = kNaN;
    if (ho_ok_ && bayes_ok_ && !pt.fit.boundary) {
        try {
            const double h = 1e-4 * std::max(1.0, std::fabs(mle_.params.psi));
            const FitResult up = constrained_mle(data_, pt.psi + h, pt.fit.params);
            const FitResult dn = constrained_mle(data_, pt.psi - h, pt.fit.params);
            const double lp_deriv = (up.loglik - dn.loglik) / (2.0 * h);

            if (!pt.ld_jlam) {
                const LogDet ld = lu_logdet(observed_information_lambda(data_, pt.fit.params));
                pt.ld_jlam = ld.sign > 0 ? ld.log_abs : kNaN;
            }
            if (std::isfinite(*pt.ld_jlam)) {
                const double log_prior_psi = log_prior_fitting_scale(prior_, pt.fit.params);
                const double log_jp = ld_j_.log_abs - ld_jlam_hat_.log_abs;
                qb = lp_deriv * std::exp(-0.5 * log_jp +
                                         0.5 * (*pt.ld_jlam - ld_jlam_hat_.log_abs) +
                                         log_prior_hat_ - log_prior_psi);
            }
        } catch (const std::exception&) {
            qb = kNaN;
        }
    }
    pt.q_b = qb;
    return qb;
}

double PivotEngine::direct_rstar(Point& pt, bool bayes) const {
    const double qv = bayes ? q_bayes_at(pt) : q_at(pt);
    if (!std::isfinite(qv)) return kNaN;
    const double ratio = qv / pt.r;
    if (!(ratio > 0.0)) return kNaN;
    const double value = pt.r + std::log(ratio) / pt.r;
    return std::isfinite(value) ? value : kNaN;
}

PivotEngine::Window PivotEngine::build_window(bool bayes) const {
    Window w;
    // node targets in r units, outside the window on both flanks
    const std::array<double, 4> targets = {0.14, 0.07, -0.07, -0.14};
    for (int i = 0; i < 4; ++i) {
        const double target = targets[i];
        double psi = mle_.params.psi - target * sd_;
        Point pt = point_at(psi);
        for (int iter = 0; iter < 10; ++iter) {
            if (std::fabs(pt.r - target) < 0.01) break;
            // local slope dr/dpsi ~ -1/sd keeps the secant well scaled
            const double slope = pt.r != 0.0 && psi != mle_.params.psi
                                     ? (pt.r - 0.0) / (psi - mle_.params.psi)
                                     : -1.0 / sd_;
            const double next = psi + (target - pt.r) / slope;
            if (!std::isfinite(next)) return w;
            psi = next;
            pt = point_at(psi, pt.fit.params);
        }
        if (!(std::fabs(pt.r) >= kWindowHalfWidth + 0.005 && std::fabs(pt.r) <= 0.35) ||
            pt.r * target <= 0.0)
            return w;
        const double value = direct_rstar(pt, bayes);
        if (!std::isfinite(value)) return w;
        w.psi[i] = psi;
        w.value[i] = value;
    }
    // monotone decreasing node order in psi
    std::array<int, 4> idx = {0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return w.psi[a] < w.psi[b]; });
    Window sorted;
    for (int i = 0; i < 4; ++i) {
        sorted.psi[i] = w.psi[idx[i]];
        sorted.value[i] = w.value[idx[i]];
    }
    sorted.valid = true;
    return sorted;
}

const PivotEngine::Window& PivotEngine::window(bool bayes) const {
    auto& slot = bayes ? window_bayes_ : window_freq_;
    if (!slot) slot = build_window(bayes);
    return *slot;
}

PivotValue PivotEngine::rstar_impl(Point& pt, bool bayes) const {
    if (!(bayes ? bayes_ok() : higher_order_ok())) return {pt.r, true, false};

    if (std::fabs(pt.r) < kWindowHalfWidth) {
        const Window& w = window(bayes);
        if (!w.valid) return {pt.r, true, false};
        return {cubic_interp(w.psi, w.value, pt.psi), false, true};
    }

    const double direct = direct_rstar(pt, bayes);
    if (std::isfinite(direct)) return {direct, false, false};

    // q broke down; near the centre blame the removable singularity and
    // interpolate, otherwise fall back to r
    if (std::fabs(pt.r) <= kSignBreakdownR) {
        const Window& w = window(bayes);
        if (w.valid) return {cubic_interp(w.psi, w.value, pt.psi), false, true};
    }
    return {pt.r, true, false};
}

PivotValue PivotEngine::rstar_from(Point& pt) const { return rstar_impl(pt, false); }
PivotValue PivotEngine::rstar_bayes_from(Point& pt) const { return rstar_impl(pt, true); }

PivotValue PivotEngine::rstar_at(double psi) const {
    Point pt = point_at(psi);
    return rstar_impl(pt, false);
}

PivotValue PivotEngine::rstar_bayes_at(double psi) const {
    Point pt = point_at(psi);
    return rstar_impl(pt, true);
}

PivotValue PivotEngine::pivot(Method m, double psi) const {
    switch (m) {
        case Method::r: {
            Point pt = point_at(psi);
            return {pt.r, false, false};
        }
        case Method::rstar: return rstar_at(psi);
        case Method::rstar_bayes: return rstar_bayes_at(psi);
    }
    throw std::logic_error("pivot: unknown method");
}

void PivotEngine::prepare(Method m) const {
    if (m == Method::rstar && higher_order_ok()) window(false);
    if (m == Method::rstar_bayes && bayes_ok()) window(true);
}

// ---------------------------------------------------------------------------
// Free functions on top of the engine

std::pair<double, bool> modified_root(const Dataset& data, double psi,
                                      const FitResult& mle, const FitResult& constrained) {
    (void)constrained;
    PivotEngine engine(data, mle);
    const PivotValue v = engine.rstar_at(psi);
    return {v.value, v.fallback};
}

double q_bayes(const Dataset& data, double psi, const FitResult& mle,
               const FitResult& constrained, const PriorSpec& prior) {
    (void)prior;  // only g == 1 is implemented; the choice is echoed in reports
    PivotEngine engine(data, mle);
    PivotEngine::Point pt;
    pt.psi = psi;
    pt.fit = constrained;
    pt.r = likelihood_root(data, psi, mle, constrained);
    const double qb = engine.q_bayes_at(pt);
    if (!std::isfinite(qb)) throw boundary_error("q_bayes: prior or information uncomputable");
    return qb;
}

std::pair<double, bool> r_star_bayes(const Dataset& data, double psi,
                                     const FitResult& mle, const FitResult& constrained) {
    (void)constrained;
    PivotEngine engine(data, mle);
    const PivotValue v = engine.rstar_bayes_at(psi);
    return {v.value, v.fallback};
}

PivotTrace compute_pivot_trace(const PivotEngine& engine, const std::vector<double>& grid,
                               bool sequential_warm) {
    PivotTrace trace;
    trace.psi_grid = grid;
    trace.r_values.reserve(grid.size());
    trace.q_values.reserve(grid.size());
    trace.rstar_values.reserve(grid.size());
    trace.fallback_flags.reserve(grid.size());

    ModelParams warm = engine.mle().params;
    for (double psi : grid) {
        PivotEngine::Point pt =
            sequential_warm ? engine.point_at(psi, warm) : engine.point_at_cold(psi);
        warm = pt.fit.params;
        trace.r_values.push_back(pt.r);
        trace.q_values.push_back(engine.q_at(pt));
        const PivotValue v = engine.rstar_from(pt);
        trace.rstar_values.push_back(v.value);
        trace.fallback_flags.push_back(v.fallback);
    }
    return trace;
}

}  // namespace signalroot
