#include "signalroot/significance.hpp"

#include <algorithm>
#include <cmath>

#include "signalroot/normal.hpp"

namespace signalroot {

SignificanceFunction::SignificanceFunction(const Dataset& data, Method method)
    : SignificanceFunction(std::make_shared<const PivotEngine>(data), method) {}

SignificanceFunction::SignificanceFunction(std::shared_ptr<const PivotEngine> engine,
                                           Method method)
    : engine_(std::move(engine)), method_(method) {
    engine_->prepare(method_);
    double zeta_min = std::numeric_limits<double>::infinity();
    for (const auto& nu : engine_->mle().params.nuisance)
        zeta_min = std::min(zeta_min, nu.zeta());
    psi_lower_ = -zeta_min;
}

double SignificanceFunction::pivot(double psi) const {
    const PivotValue v = engine_->pivot(method_, psi);
    if (v.fallback && method_ != Method::r) fallback_seen_.store(true);
    return v.value;
}

double SignificanceFunction::operator()(double psi) const { return norm_cdf(pivot(psi)); }

int SignificanceFunction::monotonicity_violations(int grid_points, double slack) const {
    // span the r-based 0.9995/0.0005 quantiles; a fixed +/- k sd grid would
    // overshoot the feasible region on the short side of skewed problems
    auto solve_r = [&](double target) {
        double psi = psi_hat() - target * engine_->scale();
        for (int i = 0; i < 30; ++i) {
            const double r = engine_->point_at(psi).r;
            if (std::fabs(r - target) < 0.01) break;
            const double slope = psi != psi_hat() && r != 0.0
                                     ? r / (psi - psi_hat())
                                     : -1.0 / engine_->scale();
            psi += (target - r) / slope;
        }
        return psi;
    };
    const double lo = solve_r(3.29);
    const double hi = solve_r(-3.29);
    double prev = 0.0;
    int violations = 0;
    for (int i = 0; i < grid_points; ++i) {
        const double psi = lo + (hi - lo) * i / (grid_points - 1);
        const double value = (*this)(psi);
        if (i > 0 && value > prev + slack) ++violations;
        prev = value;
    }
    return violations;
}

double p_value(const SignificanceFunction& sig, double psi0) {
    return 1.0 - norm_cdf(sig.pivot(psi0));
}

namespace {

// Root of pivot(psi) = z for a decreasing pivot.  Bracket by doubling steps
// away from psi_hat, then safeguarded secant/bisection.
double solve_pivot(const SignificanceFunction& sig, double z) {
    const double sd = sig.engine().scale();
    const double psi_hat = sig.psi_hat();

    double f_hat = sig.pivot(psi_hat) - z;
    // z > f(psi_hat): root is left of psi_hat; otherwise right
    const double dir = f_hat > 0.0 ? +1.0 : -1.0;

    double lo = psi_hat, f_lo = f_hat;
    double hi = psi_hat, f_hi = f_hat;
    double k = 2.0;
    bool bracketed = false;
    for (int i = 0; i < 60; ++i) {
        const double candidate = psi_hat + dir * k * sd;
        const double fc = sig.pivot(candidate) - z;
        if (dir > 0.0) {
            if (fc <= 0.0) {
                hi = candidate; f_hi = fc;
                bracketed = true;
                break;
            }
            lo = candidate; f_lo = fc;
        } else {
            if (fc >= 0.0) {
                lo = candidate; f_lo = fc;
                bracketed = true;
                break;
            }
            hi = candidate; f_hi = fc;
        }
        k *= 2.0;
    }
    if (!bracketed)
        throw std::range_error("bound: no sign change located; achieved bracket [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + "]");

    // f(lo) >= 0 >= f(hi)
    for (int iter = 0; iter < 200 && hi - lo > 1e-6; ++iter) {
        double mid;
        if (f_lo > f_hi) {
            mid = lo + (hi - lo) * f_lo / (f_lo - f_hi);  // regula falsi
            const double margin = 0.01 * (hi - lo);
            mid = std::clamp(mid, lo + margin, hi - margin);
        } else {
            mid = 0.5 * (lo + hi);
        }
        const double fm = sig.pivot(mid) - z;
        if (fm >= 0.0) { lo = mid; f_lo = fm; }
        else { hi = mid; f_hi = fm; }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

BoundResult bound(const SignificanceFunction& sig, double alpha, Side side) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("bound: alpha must be in (0, 0.5)");
    const double z = side == Side::lower ? norm_quantile(1.0 - alpha) : norm_quantile(alpha);
    const double raw = solve_pivot(sig, z);
    return {raw, std::max(raw, 0.0)};
}

double median_unbiased(const SignificanceFunction& sig) { return solve_pivot(sig, 0.0); }

std::vector<TableRow> significance_table(const PivotEngine& engine,
                                         const std::vector<double>& grid) {
    engine.prepare(Method::rstar);
    engine.prepare(Method::rstar_bayes);
    std::vector<TableRow> rows;
    rows.reserve(grid.size());
    // same evaluation path as the pointwise evaluator, so table entries agree
    // with p_value/bound beyond solver tolerance
    for (double psi : grid) {
        PivotEngine::Point pt = engine.point_at(psi);
        const PivotValue rs = engine.rstar_from(pt);
        const PivotValue rb = engine.rstar_bayes_from(pt);
        rows.push_back({psi, norm_cdf(pt.r), norm_cdf(rs.value), norm_cdf(rb.value),
                        rs.fallback, rb.fallback});
    }
    return rows;
}

std::vector<double> auto_grid(const PivotEngine& engine, int points) {
    if (points < 2) throw std::invalid_argument("auto_grid: need at least 2 points");
    auto shared = std::make_shared<const PivotEngine>(engine);
    SignificanceFunction r_sig(shared, Method::r);
    const double lo = bound(r_sig, 0.001, Side::lower).raw;
    const double hi = bound(r_sig, 0.001, Side::upper).raw;
    std::vector<double> grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = lo + (hi - lo) * i / (points - 1);
    return grid;
}

InferenceReport analyze(const Dataset& data, const std::vector<Method>& methods,
                        const std::vector<double>& alphas, const std::vector<double>& psi0s) {
    auto engine = std::make_shared<const PivotEngine>(data);

    InferenceReport report;
    report.n_channels = data.size();
    report.psi_hat = engine->psi_hat();
    report.profile_information = engine->jp_hat();
    report.mle_boundary = engine->mle().boundary;
    report.mle_iterations = engine->mle().iterations;

    for (Method m : methods) {
        SignificanceFunction sig(engine, m);
        report.psi_lower_limit = sig.psi_lower_limit();
        {
            // separate instance: the diagnostic scan may legitimately fall
            // back near the edges without tainting the reported results
            SignificanceFunction scan(engine, m);
            report.monotonicity_violations =
                std::max(report.monotonicity_violations, scan.monotonicity_violations());
        }

        MethodReport mr;
        mr.method = m;
        mr.median_unbiased = median_unbiased(sig);
        for (double psi0 : psi0s) mr.p_values.push_back({psi0, p_value(sig, psi0)});
        for (double alpha : alphas) {
            const BoundResult lo = bound(sig, alpha, Side::lower);
            const BoundResult hi = bound(sig, alpha, Side::upper);
            BoundEntry entry;
            entry.alpha = alpha;
            entry.lower_raw = lo.raw;
            entry.lower_clamped = lo.clamped;
            entry.upper_raw = hi.raw;
            entry.upper_clamped = hi.clamped;
            entry.model_doubt = hi.raw < 0.0;
            mr.bounds.push_back(entry);
        }
        mr.fallback_used = sig.fallback_seen();
        report.methods.push_back(std::move(mr));
    }
    return report;
}

}  // namespace signalroot
