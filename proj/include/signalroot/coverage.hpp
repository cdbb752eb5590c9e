#pragma once

#include <cstdint>
#include <vector>

#include "signalroot/pivots.hpp"
#include "signalroot/types.hpp"

namespace signalroot {

// A Monte Carlo coverage study: replicate datasets are drawn from fixed true
// parameters and, at each nominal level p, the upper (left-tail) bound is
// checked against the true signal value.  All randomness is keyed by
// (seed, replicate index) through a counter-based generator, so results are
// bit-identical for any thread count.
struct CoverageConfig {
    double psi_true = 0.0;
    std::vector<double> beta;
    std::vector<double> gamma;
    std::vector<double> t;
    std::vector<double> u;
    long long replications = 1;
    std::vector<double> levels;   // nominal coverage of upper bounds, ascending
    std::vector<Method> methods;
    std::uint64_t seed = 0;
    int threads = 1;

    std::size_t n_channels() const { return beta.size(); }
    void validate() const;
};

struct CoverageCell {
    long long successes = 0;
    double coverage = 0.0;
    double std_error = 0.0;       // sqrt(p(1-p)/R_effective)
    bool outside_3se = false;     // |coverage - nominal| > 3 SE
};

struct CoverageResult {
    CoverageConfig config;
    // cells[method index][level index], aligned with config.methods/levels
    std::vector<std::vector<CoverageCell>> cells;
    long long fallback_replicates = 0;  // r* machinery fell back to r
    long long failed_replicates = 0;    // optimizer failure; excluded from denominators
    long long effective_replications = 0;
};

// Replicate draw: y1k ~ Poisson(gamma_k psi + beta_k), y2k ~ Poisson(beta_k t_k),
// y3k ~ Poisson(gamma_k u_k), deterministic in (seed, replicate_index).
Dataset generate_dataset(const CoverageConfig& config, std::uint64_t replicate_index);

CoverageResult coverage_study(const CoverageConfig& config);

// The same study repeated along a psi_true grid (everything else shared).
std::vector<CoverageResult> coverage_curve(const CoverageConfig& base,
                                           const std::vector<double>& psi_values);

namespace detail {

// Success indicators for a single replicate, exposed for the exact-coverage
// oracle and the bound-inversion consistency test.  success[m][l] uses the
// inversion identity: psi_true < psi_p  <=>  Phi{pivot(psi_true)} > 1 - p,
// strict (a tie counts as a failure).
struct ReplicateOutcome {
    bool failed = false;
    bool fallback = false;
    std::vector<std::uint64_t> success_bits;  // per method, bit l = level l
};

ReplicateOutcome evaluate_replicate(const CoverageConfig& config, const Dataset& data);

}  // namespace detail

}  // namespace signalroot
