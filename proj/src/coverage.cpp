#include "signalroot/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "signalroot/model.hpp"
#include "signalroot/normal.hpp"
#include "signalroot/rng.hpp"

namespace signalroot {

void CoverageConfig::validate() const {
    const std::size_t n = beta.size();
    if (n == 0 || gamma.size() != n || t.size() != n || u.size() != n)
        throw std::invalid_argument("coverage: beta/gamma/t/u must share a positive length");
    for (std::size_t k = 0; k < n; ++k) {
        if (!(beta[k] > 0.0) || !(gamma[k] > 0.0) || !(t[k] > 0.0) || !(u[k] > 0.0))
            throw std::invalid_argument("coverage: beta, gamma, t, u must be positive");
        if (!(gamma[k] * psi_true + beta[k] > 0.0))
            throw std::invalid_argument("coverage: psi_true gives a non-positive signal mean");
    }
    if (replications < 1) throw std::invalid_argument("coverage: replications must be >= 1");
    if (levels.empty() || methods.empty())
        throw std::invalid_argument("coverage: need at least one level and one method");
    if (levels.size() > 64) throw std::invalid_argument("coverage: at most 64 levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0))
            throw std::invalid_argument("coverage: levels must lie in (0,1)");
        if (i > 0 && !(levels[i] > levels[i - 1]))
            throw std::invalid_argument("coverage: levels must be sorted ascending");
    }
    if (threads < 1) throw std::invalid_argument("coverage: threads must be >= 1");
}

Dataset generate_dataset(const CoverageConfig& config, std::uint64_t replicate_index) {
    CounterRng rng(config.seed, replicate_index);
    Dataset data;
    data.channels.resize(config.n_channels());
    for (std::size_t k = 0; k < config.n_channels(); ++k) {
        auto& c = data.channels[k];
        c.y1 = poisson_sample(rng, config.gamma[k] * config.psi_true + config.beta[k]);
        c.y2 = poisson_sample(rng, config.beta[k] * config.t[k]);
        c.y3 = poisson_sample(rng, config.gamma[k] * config.u[k]);
        c.t = config.t[k];
        c.u = config.u[k];
    }
    return data;
}

namespace detail {

ReplicateOutcome evaluate_replicate(const CoverageConfig& config, const Dataset& data) {
    ReplicateOutcome out;
    out.success_bits.assign(config.methods.size(), 0);

    bool need_higher_order = false;
    for (Method m : config.methods) need_higher_order = need_higher_order || m != Method::r;

    try {
        FitResult mle = global_mle(data);
        std::vector<double> pivots(config.methods.size());
        if (!need_higher_order) {
            const FitResult at_true = constrained_mle(data, config.psi_true, mle.params);
            const double r = likelihood_root(data, config.psi_true, mle, at_true);
            for (auto& p : pivots) p = r;
        } else {
            PivotEngine engine(data, std::move(mle));
            PivotEngine::Point pt = engine.point_at(config.psi_true);
            for (std::size_t m = 0; m < config.methods.size(); ++m) {
                switch (config.methods[m]) {
                    case Method::r:
                        pivots[m] = pt.r;
                        break;
                    case Method::rstar: {
                        const PivotValue v = engine.rstar_from(pt);
                        pivots[m] = v.value;
                        out.fallback = out.fallback || v.fallback;
                        break;
                    }
                    case Method::rstar_bayes: {
                        const PivotValue v = engine.rstar_bayes_from(pt);
                        pivots[m] = v.value;
                        out.fallback = out.fallback || v.fallback;
                        break;
                    }
                }
            }
        }
        for (std::size_t m = 0; m < config.methods.size(); ++m) {
            const double phi = norm_cdf(pivots[m]);
            for (std::size_t l = 0; l < config.levels.size(); ++l)
                if (phi > 1.0 - config.levels[l]) out.success_bits[m] |= 1ull << l;
        }
    } catch (const std::exception&) {
        out.failed = true;
    }
    return out;
}

}  // namespace detail

namespace {

struct Tally {
    std::vector<std::vector<long long>> successes;  // [method][level]
    long long fallback = 0;
    long long failed = 0;

    explicit Tally(const CoverageConfig& config)
        : successes(config.methods.size(),
                    std::vector<long long>(config.levels.size(), 0)) {}

    void add(const detail::ReplicateOutcome& out, std::size_t n_levels) {
        if (out.failed) {
            ++failed;
            return;
        }
        if (out.fallback) ++fallback;
        for (std::size_t m = 0; m < successes.size(); ++m)
            for (std::size_t l = 0; l < n_levels; ++l)
                if (out.success_bits[m] & (1ull << l)) ++successes[m][l];
    }

    void merge(const Tally& other) {
        for (std::size_t m = 0; m < successes.size(); ++m)
            for (std::size_t l = 0; l < successes[m].size(); ++l)
                successes[m][l] += other.successes[m][l];
        fallback += other.fallback;
        failed += other.failed;
    }
};

}  // namespace

CoverageResult coverage_study(const CoverageConfig& config) {
    config.validate();

    const long long reps = config.replications;
    const int threads = std::min<long long>(std::max(config.threads, 1), std::max<long long>(1, reps));

    auto run_block = [&](long long begin, long long end, Tally& tally) {
        for (long long i = begin; i < end; ++i) {
            const Dataset data = generate_dataset(config, static_cast<std::uint64_t>(i));
            tally.add(detail::evaluate_replicate(config, data), config.levels.size());
        }
    };

    Tally total(config);
    if (threads == 1) {
        run_block(0, reps, total);
    } else {
        // contiguous blocks; integer tallies make the merge order-independent
        std::vector<Tally> partial(threads, Tally(config));
        std::vector<std::thread> pool;
        const long long chunk = (reps + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            const long long begin = w * chunk;
            const long long end = std::min(reps, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run_block, begin, end, std::ref(partial[w]));
        }
        for (auto& th : pool) th.join();
        for (const auto& p : partial) total.merge(p);
    }

    CoverageResult result;
    result.config = config;
    result.fallback_replicates = total.fallback;
    result.failed_replicates = total.failed;
    result.effective_replications = reps - total.failed;
    result.cells.assign(config.methods.size(),
                        std::vector<CoverageCell>(config.levels.size()));
    const double denom = std::max<long long>(result.effective_replications, 1);
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        for (std::size_t l = 0; l < config.levels.size(); ++l) {
            CoverageCell& cell = result.cells[m][l];
            cell.successes = total.successes[m][l];
            cell.coverage = cell.successes / denom;
            cell.std_error = std::sqrt(cell.coverage * (1.0 - cell.coverage) / denom);
            cell.outside_3se =
                std::fabs(cell.coverage - config.levels[l]) > 3.0 * cell.std_error;
        }
    }
    return result;
}

std::vector<CoverageResult> coverage_curve(const CoverageConfig& base,
                                           const std::vector<double>& psi_values) {
    std::vector<CoverageResult> out;
    out.reserve(psi_values.size());
    for (double psi : psi_values) {
        CoverageConfig config = base;
        config.psi_true = psi;
        out.push_back(coverage_study(config));
    }
    return out;
}

}  // namespace signalroot
