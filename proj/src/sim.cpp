#include "vcim/sim.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "vcim/association.hpp"
#include "vcim/errors.hpp"

namespace vcim {

void SimConfig::validate() const {
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(sigma_a2 >= 0.0)) throw ConfigError("sigma_a2 must be >= 0");
    if (!(sigma_e2 > 0.0)) throw ConfigError("sigma_e2 must be > 0");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    const bool has_pattern = !pattern.empty();
    const bool has_eigen = lambdas.size() > 0;
    if (has_pattern == has_eigen) {
        throw ConfigError("set exactly one of pattern or eigenstructure");
    }
    if (has_pattern) {
        if (pattern.size() < 2) throw ConfigError("pattern needs >= 2 groups");
        for (int ni : pattern) {
            if (ni < 1) throw ConfigError("group sizes must be >= 1");
        }
    }
    grid.validate();
}

MixedModelSpec gen_oneway(const std::vector<int>& pattern, double sigma_a2,
                          double sigma_e2, Rng& rng) {
    const int a = static_cast<int>(pattern.size());
    if (a < 2) throw ConfigError("pattern needs >= 2 groups");
    int n = 0;
    for (int ni : pattern) {
        if (ni < 1) throw ConfigError("group sizes must be >= 1");
        n += ni;
    }

    MixedModelSpec model;
    model.X = Eigen::MatrixXd::Ones(n, 1);
    model.Z = Eigen::MatrixXd::Zero(n, a);
    model.A = Eigen::MatrixXd::Identity(a, a);
    model.y.resize(n);

    const double sd_a = std::sqrt(sigma_a2);
    const double sd_e = std::sqrt(sigma_e2);
    std::vector<double> effects(a);
    for (int i = 0; i < a; ++i) effects[i] = sd_a * rng.normal();

    int row = 0;
    for (int i = 0; i < a; ++i) {
        for (int j = 0; j < pattern[i]; ++j, ++row) {
            model.Z(row, i) = 1.0;
            model.y(row) = effects[i] + sd_e * rng.normal();
        }
    }
    return model;
}

Eigen::VectorXd gen_baseline(const Eigen::VectorXd& lambdas,
                             const std::vector<int>& mults, double sigma_a2,
                             double sigma_e2, Rng& rng) {
    const int L = static_cast<int>(lambdas.size());
    if (static_cast<int>(mults.size()) != L || L < 2) {
        throw DimensionError("lambdas and mults must agree with L >= 2");
    }
    Eigen::VectorXd S(L);
    for (int l = 0; l < L; ++l) {
        S(l) = (lambdas(l) * sigma_a2 + sigma_e2) * rng.chisq(mults[l]);
    }
    return S;
}

StudyResult run_study(const SimConfig& config) {
    config.validate();

    // Design structure is data-independent; build it once.
    EigenStructure structure;
    if (!config.eigen_route()) {
        Rng dummy(0);
        MixedModelSpec probe = gen_oneway(config.pattern, 1.0, 1.0, dummy);
        structure = eigen_reduce(probe);
    }

    const double rho_true = config.rho_true();
    StudyResult result;
    result.rho_true = rho_true;
    result.reps.resize(config.reps);

    const auto run_one = [&](int rep) {
        RepRecord& rec = result.reps[rep];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Rng rng(config.seed ^ static_cast<std::uint64_t>(rep));
            EigenReduction red;
            if (config.eigen_route()) {
                const Eigen::VectorXd S =
                    gen_baseline(config.lambdas, config.mults, config.sigma_a2,
                                 config.sigma_e2, rng);
                red = reduction_from_stats(config.lambdas, config.mults, S);
            } else {
                const MixedModelSpec model = gen_oneway(
                    config.pattern, config.sigma_a2, config.sigma_e2, rng);
                const Eigen::VectorXd S = sufficient_stats(
                    model.y, structure.K, structure.projectors);
                red = reduction_from_stats(structure.lambdas, structure.mults, S);
            }

            const PlausibilityResult pi =
                interval(red, config.alpha, config.grid, config.refine_tol,
                         config.law);
            rec.empty = pi.empty;
            rec.multimodal = pi.multimodal;
            if (!pi.empty) {
                rec.lower = pi.lower;
                rec.upper = pi.upper;
                rec.length = pi.upper - pi.lower;
                rec.covered = pi.lower <= rho_true && rho_true <= pi.upper;
            }
            rec.pl_true = pl_at(red, rho_true, config.law);
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        rec.runtime_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
    };

    int workers = config.threads == 0
                      ? static_cast<int>(std::thread::hardware_concurrency())
                      : config.threads;
    workers = std::max(1, std::min(workers, config.reps));

    if (workers == 1) {
        for (int rep = 0; rep < config.reps; ++rep) run_one(rep);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int rep = next.fetch_add(1); rep < config.reps;
                     rep = next.fetch_add(1)) {
                    run_one(rep);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    // Sequential rep-ordered aggregation: identical under any thread count.
    int ok = 0, covered = 0;
    double length_sum = 0.0;
    for (const RepRecord& rec : result.reps) {
        if (!rec.ok) {
            ++result.failures;
            continue;
        }
        ++ok;
        if (rec.covered) ++covered;
        length_sum += rec.length;
    }
    if (result.failures >
        static_cast<int>(config.max_failure_rate * config.reps)) {
        throw NumericalError(
            std::to_string(result.failures) + " of " +
            std::to_string(config.reps) +
            " replications failed (budget exceeded); first error: " +
            [&] {
                for (const auto& rec : result.reps) {
                    if (!rec.ok) return rec.error;
                }
                return std::string("unknown");
            }());
    }
    result.empirical_coverage = ok > 0 ? static_cast<double>(covered) / ok : 0.0;
    result.mean_length = ok > 0 ? length_sum / ok : 0.0;
    return result;
}

} // namespace vcim
