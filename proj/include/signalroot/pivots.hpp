#pragma once

#include <array>
#include <functional>
#include <optional>
#include <utility>

#include "signalroot/canonical.hpp"
#include "signalroot/linalg.hpp"
#include "signalroot/model.hpp"
#include "signalroot/prior.hpp"
#include "signalroot/types.hpp"

namespace signalroot {

enum class Method { r, rstar, rstar_bayes };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

// A pivot evaluation and how it was obtained.  fallback means the
// higher-order correction was uncomputable and the plain likelihood root
// was returned; interpolated marks values from the cubic patch across the
// removable singularity of r* at psi_hat.
struct PivotValue {
    double value = 0.0;
    bool fallback = false;
    bool interpolated = false;
};

// Signed likelihood root r(psi) = sign(psi_hat - psi) sqrt(2 {l_p(hat) - l_p(psi)}).
// A radicand below -1e-8 means the constrained fit beat the global optimum;
// that is an optimizer failure, reported as fit_error (refit the global MLE).
double likelihood_root(const Dataset& data, double psi, const FitResult& mle,
                       const FitResult& constrained);

// Correction factor q(psi) built from the canonical parameter:
//   | phi(th) - phi(th_psi)   phi_lambda(th_psi) | / | phi_theta(th) |
//     * { |j(th)| / |j_ll(th_psi)| }^{1/2}
// Throws boundary_error when a determinant is singular or the information
// blocks are not positive definite (callers fall back to r).
double q_stat(const Dataset& data, double psi, const FitResult& mle,
              const FitResult& constrained);

// Same determinant ratio with a caller-supplied canonical parameter; the
// correction is invariant under affine maps phi -> A phi + b.
using PhiFn = std::function<std::vector<double>(const ModelParams&)>;
double q_generic(const Dataset& data, const FitResult& mle,
                 const FitResult& constrained, const PhiFn& phi);

// Modified likelihood root r*(psi) = r + log(q/r)/r with the interpolation
// window and fallback handling described on PivotEngine.
std::pair<double, bool> modified_root(const Dataset& data, double psi,
                                      const FitResult& mle, const FitResult& constrained);

// Bayesian correction q_B(psi) under the non-informative matching prior
// (g == 1), evaluated on the fitting scale:
//   l_p'(psi) j_p(psi_hat)^{-1/2} {|j_ll(th_psi)|/|j_ll(th)|}^{1/2} pi(th)/pi(th_psi)
double q_bayes(const Dataset& data, double psi, const FitResult& mle,
               const FitResult& constrained, const PriorSpec& prior);

// r*_B(psi): as modified_root with q replaced by q_B.
std::pair<double, bool> r_star_bayes(const Dataset& data, double psi,
                                     const FitResult& mle, const FitResult& constrained);

// Evaluates r, q, r* and r*_B for one dataset, with the MLE-side quantities
// (phi(th_hat), |phi_theta(th_hat)|, |j(th_hat)|, j_p, prior at th_hat)
// computed once and reused across psi.
//
// Near psi_hat the r* formula is 0/0; inside |r| < 0.05 the value is a local
// cubic through four direct evaluations bracketing the window.  When q is
// uncomputable (boundary data such as y1 = 0, singular determinants, or a
// q/r sign breakdown with |r| > 0.5) the pivot falls back to r and says so.
//
// After prepare() the engine is logically immutable and safe to share
// across threads.
class PivotEngine {
public:
    PivotEngine(Dataset data, FitResult mle);

    // runs the global fit itself
    explicit PivotEngine(const Dataset& data);

    const Dataset& data() const { return data_; }
    const FitResult& mle() const { return mle_; }
    double psi_hat() const { return mle_.params.psi; }
    double loglik_hat() const { return mle_.loglik; }

    // profile information at the MLE; NaN when not computable
    double jp_hat() const { return jp_; }
    // scale for brackets and window placement: j_p^{-1/2} or a fallback
    double scale() const { return sd_; }
    bool higher_order_ok() const { return ho_ok_; }
    bool bayes_ok() const { return ho_ok_ && bayes_ok_; }

    struct Point {
        double psi = 0.0;
        FitResult fit;
        double r = 0.0;
        std::optional<double> ld_jlam;  // log |j_ll(theta_psi)|
        std::optional<double> q;
        std::optional<double> q_b;
    };

    Point point_at(double psi) const;
    Point point_at(double psi, const ModelParams& warm) const;
    // moment-start fit, independent of any other evaluation
    Point point_at_cold(double psi) const;

    // NaN when uncomputable at this point
    double q_at(Point& pt) const;
    double q_bayes_at(Point& pt) const;

    PivotValue rstar_at(double psi) const;
    PivotValue rstar_bayes_at(double psi) const;
    // variants reusing an existing constrained-fit point
    PivotValue rstar_from(Point& pt) const;
    PivotValue rstar_bayes_from(Point& pt) const;
    PivotValue pivot(Method m, double psi) const;

    // builds the interpolation window(s) eagerly
    void prepare(Method m) const;

    static constexpr double kWindowHalfWidth = 0.05;

private:
    struct Window {
        bool valid = false;
        std::array<double, 4> psi{};
        std::array<double, 4> value{};
    };

    PivotValue rstar_impl(Point& pt, bool bayes) const;
    double direct_rstar(Point& pt, bool bayes) const;
    const Window& window(bool bayes) const;
    Window build_window(bool bayes) const;

    Dataset data_;
    FitResult mle_;
    PriorSpec prior_;

    bool ho_ok_ = false;
    bool bayes_ok_ = false;
    double jp_ = std::numeric_limits<double>::quiet_NaN();
    double sd_ = 1.0;
    std::vector<double> phi_hat_;
    LogDet ld_phi_theta_;
    LogDet ld_j_;
    LogDet ld_jlam_hat_;
    double log_prior_hat_ = 0.0;

    // lazily built; prepare() makes subsequent use const-safe
    mutable std::optional<Window> window_freq_;
    mutable std::optional<Window> window_bayes_;
};

// Pivot values over an ordered psi grid.  In the default mode constrained
// fits are warm-started sequentially (smooth traces); with
// sequential_warm = false every point re-initializes from moment estimates,
// so grid points are independent and may be evaluated in parallel.  Both
// modes are deterministic.  q and r* entries are NaN / r where the
// correction fell back.
struct PivotTrace {
    std::vector<double> psi_grid;
    std::vector<double> r_values;
    std::vector<double> q_values;
    std::vector<double> rstar_values;
    std::vector<bool> fallback_flags;
};

PivotTrace compute_pivot_trace(const PivotEngine& engine, const std::vector<double>& grid,
                               bool sequential_warm = true);

}  // namespace signalroot
