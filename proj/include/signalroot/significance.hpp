#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "signalroot/pivots.hpp"

namespace signalroot {

// The monotone decreasing map psi -> Phi{pivot(psi)} for one pivot method,
// with the global fit cached.  Encodes p-values and confidence bounds at all
// levels at once.  Immutable after construction and safe to share across
// threads; only a sticky fallback indicator is updated during evaluation.
class SignificanceFunction {
public:
    SignificanceFunction(const Dataset& data, Method method);
    SignificanceFunction(std::shared_ptr<const PivotEngine> engine, Method method);

    Method method() const { return method_; }
    double psi_hat() const { return engine_->psi_hat(); }
    // Extended lower limit -min_k exp(lam1_hat_k) implied by the fitted
    // nuisance values.  Reported for interpretation; evaluation itself is
    // driven by the profile fit and may be queried below it.
    double psi_lower_limit() const { return psi_lower_; }

    double pivot(double psi) const;
    double operator()(double psi) const;  // Phi{pivot(psi)}

    bool fallback_seen() const { return fallback_seen_.load(); }
    const PivotEngine& engine() const { return *engine_; }

    // Counts grid points where Phi{pivot} increases by more than `slack`.
    int monotonicity_violations(int grid_points = 200, double slack = 1e-3) const;

private:
    std::shared_ptr<const PivotEngine> engine_;
    Method method_;
    double psi_lower_ = 0.0;
    mutable std::atomic<bool> fallback_seen_{false};
};

// 1 - Phi{pivot(psi0)}: the one-sided p-value for testing psi = psi0
// against psi > psi0.
double p_value(const SignificanceFunction& sig, double psi0);

enum class Side { lower, upper };

struct BoundResult {
    double raw = 0.0;
    double clamped = 0.0;  // max(raw, 0)
};

// Confidence bound at level alpha in (0, 0.5): the lower bound solves
// Phi{pivot} = 1-alpha, the upper solves Phi{pivot} = alpha.  Bracketing
// starts at psi_hat +/- 2 j_p^{-1/2} and doubles until a sign change;
// failure to bracket raises std::range_error carrying the achieved bracket.
BoundResult bound(const SignificanceFunction& sig, double alpha, Side side);

// The psi at which the significance function crosses 0.5; equals psi_hat
// for the r method.
double median_unbiased(const SignificanceFunction& sig);

// One grid row of the data behind a significance-function plot.
struct TableRow {
    double psi = 0.0;
    double phi_r = 0.0;
    double phi_rstar = 0.0;
    double phi_rstar_bayes = 0.0;
    bool fallback_rstar = false;
    bool fallback_bayes = false;
};

std::vector<TableRow> significance_table(const PivotEngine& engine,
                                         const std::vector<double>& grid);

// Grid spanning the alpha = 0.001 / 0.999 r-based bounds.
std::vector<double> auto_grid(const PivotEngine& engine, int points);

// ---------------------------------------------------------------------------
// Aggregated analysis report

struct PValueEntry {
    double psi0 = 0.0;
    double p = 0.0;
};

struct BoundEntry {
    double alpha = 0.0;
    double lower_raw = 0.0, lower_clamped = 0.0;
    double upper_raw = 0.0, upper_clamped = 0.0;
    // upper bound below zero: no physical parameter value is supported,
    // which casts doubt on the model itself
    bool model_doubt = false;
};

struct MethodReport {
    Method method = Method::r;
    double median_unbiased = 0.0;
    bool fallback_used = false;
    std::vector<PValueEntry> p_values;
    std::vector<BoundEntry> bounds;
};

struct InferenceReport {
    std::size_t n_channels = 0;
    double psi_hat = 0.0;
    double profile_information = 0.0;  // NaN when not computable
    double psi_lower_limit = 0.0;
    bool mle_boundary = false;
    int mle_iterations = 0;
    int monotonicity_violations = 0;
    std::string prior = "matching prior, g == 1";
    std::vector<MethodReport> methods;

    bool any_fallback() const {
        for (const auto& m : methods)
            if (m.fallback_used) return true;
        return false;
    }
};

InferenceReport analyze(const Dataset& data, const std::vector<Method>& methods,
                        const std::vector<double>& alphas, const std::vector<double>& psi0s);

}  // namespace signalroot
