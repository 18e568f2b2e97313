#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vcim/model.hpp"
#include "vcim/plausibility.hpp"
#include "vcim/reduction.hpp"
#include "vcim/rng.hpp"

namespace vcim {

/**
 * Configuration of a coverage/length study.  Exactly one of `pattern`
 * (one-way group sizes, full matrix pipeline per replication) or
 * `lambdas`/`mults` (direct chi-square sampling of the sufficient
 * statistics) must be set.
 */
struct SimConfig {
    std::vector<int> pattern;       // one-way group sizes (empty if eigen route)
    Eigen::VectorXd lambdas;        // eigenstructure route
    std::vector<int> mults;

    double sigma_a2 = 1.0;
    double sigma_e2 = 1.0;
    int reps = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int threads = 1;                // 0 selects hardware concurrency

    GridSpec grid;
    double refine_tol = 1e-6;
    LawOptions law;
    double max_failure_rate = 0.01;

    [[nodiscard]] bool eigen_route() const { return pattern.empty(); }
    [[nodiscard]] double rho_true() const {
        return sigma_a2 / (sigma_a2 + sigma_e2);
    }
    void validate() const;
};

struct RepRecord {
    bool ok = false;
    bool covered = false;
    bool empty = false;
    bool multimodal = false;
    double lower = 0.0;
    double upper = 0.0;
    double length = 0.0;
    double pl_true = 0.0;   // pl evaluated at the generating rho
    double runtime_s = 0.0;
    std::string error;
};

struct StudyResult {
    double rho_true = 0.0;
    double empirical_coverage = 0.0;
    double mean_length = 0.0;
    int failures = 0;
    std::vector<RepRecord> reps;
};

/// One-way random-effects data: X = intercept column, Z = group indicators,
/// A = identity, y_ij = alpha_i + eps_ij (grand mean fixed at zero).
MixedModelSpec gen_oneway(const std::vector<int>& pattern, double sigma_a2,
                          double sigma_e2, Rng& rng);

/// Draws the sufficient statistics directly:
/// S_l = (lambda_l sigma_a^2 + sigma_e^2) * ChiSq(r_l), independent.
Eigen::VectorXd gen_baseline(const Eigen::VectorXd& lambdas,
                             const std::vector<int>& mults, double sigma_a2,
                             double sigma_e2, Rng& rng);

/// Runs the full study: per replication, generate data, reduce, compute the
/// level-alpha interval and pl at the generating rho.  Replications are
/// independent streams (seed ^ rep); aggregation is rep-ordered so results
/// are identical under any thread count.  Throws NumericalError when more
/// than max_failure_rate of replications fail.
StudyResult run_study(const SimConfig& config);

} // namespace vcim
