#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace signalroot {

// One channel of a counting experiment: three Poisson counts with means
// (gamma*psi + beta, beta*t, gamma*u).  t and u are known exposure constants.
struct ChannelData {
    long long y1 = 0;  // main measurement
    long long y2 = 0;  // background measurement
    long long y3 = 0;  // acceptance measurement
    double t = 1.0;    // background exposure constant, > 0
    double u = 1.0;    // acceptance exposure constant, > 0

    long long total() const { return y1 + y2 + y3; }
};

struct Dataset {
    std::vector<ChannelData> channels;

    std::size_t size() const { return channels.size(); }

    // Throws std::invalid_argument on negative counts, non-positive t/u or
    // an empty channel list.
    void validate() const;
};

// Per-channel nuisance pair on the fitting scale:
//   lam1 = log(beta) - log(gamma),  lam2 = log(beta),
// so beta = exp(lam2), gamma = exp(lam2 - lam1), zeta = beta/gamma = exp(lam1).
// All Poisson means are positive iff exp(lam1) > -psi.
struct Nuisance {
    double lam1 = 0.0;
    double lam2 = 0.0;

    double beta() const;
    double gamma() const;
    double zeta() const;
};

// Full parameter theta = (psi, lam1_1, lam2_1, ..., lam1_n, lam2_n), d = 2n+1.
struct ModelParams {
    double psi = 0.0;
    std::vector<Nuisance> nuisance;

    std::size_t dim() const { return 2 * nuisance.size() + 1; }

    // true iff exp(lam1_k) > -psi for every channel (all means positive)
    bool in_domain() const;

    std::vector<double> to_vector() const;
    static ModelParams from_vector(const std::vector<double>& v);
};

struct FitResult {
    ModelParams params;
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0;
    // A clamp was active at the optimum (extended-space edge or |lam| cap).
    // Higher-order quantities are unreliable for such fits.
    bool boundary = false;
};

// Parameter-space edge reached (y2=0/y3=0 closed forms, singular information,
// unidentified gamma, ...).  Callers degrade to first-order inference.
class boundary_error : public std::runtime_error {
public:
    explicit boundary_error(const std::string& what) : std::runtime_error(what) {}
};

// Optimizer gave up; carries the best iterate found.
class fit_error : public std::runtime_error {
public:
    fit_error(const std::string& what, FitResult best)
        : std::runtime_error(what), best_fit(std::move(best)) {}
    FitResult best_fit;
};

}  // namespace signalroot
