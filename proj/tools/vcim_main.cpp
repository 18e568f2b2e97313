#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vcim/errors.hpp"
#include "vcim/io.hpp"
#include "vcim/oracle.hpp"
#include "vcim/plausibility.hpp"
#include "vcim/sim.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct InputOptions {
    std::string oneway;
    std::string y, x, z, a;
    std::string eigen_spec;
    std::string stats;
    std::string reduction_file;
    double cluster_tol = 0.0; // 0 selects the relative default
};

void add_input_options(CLI::App* cmd, InputOptions& in, bool allow_indirect) {
    cmd->add_option("--oneway", in.oneway,
                    "one-way CSV with header 'group,value'");
    cmd->add_option("--y", in.y, "response vector CSV (headerless)");
    cmd->add_option("--x", in.x, "fixed-effect design CSV");
    cmd->add_option("--z", in.z, "random-effect design CSV");
    cmd->add_option("--a", in.a,
                    "random-effect covariance CSV ('identity' or omit for I)");
    cmd->add_option("--cluster-tol", in.cluster_tol,
                    "absolute eigenvalue clustering tolerance (0 = relative "
                    "1e-8 default)");
    if (allow_indirect) {
        cmd->add_option("--eigen", in.eigen_spec,
                        "eigenstructure 'lambda:mult,...' (needs --stats)");
        cmd->add_option("--stats", in.stats,
                        "comma-separated sufficient statistics S_1..S_L");
        cmd->add_option("--reduction", in.reduction_file,
                        "reduction JSON produced by the reduce command");
    }
}

json inputs_echo(const InputOptions& in) {
    json j = json::object();
    if (!in.oneway.empty()) j["oneway"] = in.oneway;
    if (!in.y.empty()) {
        j["y"] = in.y;
        j["x"] = in.x;
        j["z"] = in.z;
        j["a"] = in.a.empty() ? "identity" : in.a;
    }
    if (!in.eigen_spec.empty()) {
        j["eigen"] = in.eigen_spec;
        j["stats"] = in.stats;
    }
    if (!in.reduction_file.empty()) j["reduction"] = in.reduction_file;
    return j;
}

vcim::MixedModelSpec load_model(const InputOptions& in) {
    if (!in.oneway.empty()) return vcim::load_oneway(in.oneway);
    if (!in.y.empty() || !in.x.empty() || !in.z.empty()) {
        if (in.y.empty() || in.x.empty() || in.z.empty()) {
            throw vcim::ConfigError("--y, --x and --z must be given together");
        }
        const std::string a = (in.a == "identity") ? std::string{} : in.a;
        return vcim::load_general(in.y, in.x, in.z, a);
    }
    throw vcim::ConfigError("no input given (use --oneway or --y/--x/--z)");
}

vcim::EigenReduction load_reduction(const InputOptions& in) {
    if (!in.reduction_file.empty()) {
        std::ifstream f(in.reduction_file);
        if (!f) {
            throw vcim::ParseError(in.reduction_file + ": cannot open file");
        }
        json j;
        try {
            f >> j;
        } catch (const json::exception& e) {
            throw vcim::ParseError(in.reduction_file + ": " + e.what());
        }
        if (j.contains("reduction")) j = j["reduction"];
        return vcim::reduction_from_json(j);
    }
    if (!in.eigen_spec.empty()) {
        if (in.stats.empty()) {
            throw vcim::ConfigError("--eigen requires --stats");
        }
        auto [lambdas, mults] = vcim::load_eigen(in.eigen_spec);
        const Eigen::VectorXd S = vcim::parse_number_list(in.stats);
        return vcim::reduction_from_stats(lambdas, mults, S);
    }
    return vcim::reduce(load_model(in), in.cluster_tol > 0 ? in.cluster_tol : -1.0);
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw vcim::ParseError(out_path + ": cannot open for writing");
    f << text;
}

int default_threads() {
    if (const char* env = std::getenv("VC_IM_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

int dispatch(int argc, char** argv) {
    CLI::App app{
        "plausibility inference for the heritability coefficient in "
        "two-variance-component mixed models"};
    app.require_subcommand(1);

    // ---- reduce ----
    auto* reduce_cmd = app.add_subcommand(
        "reduce", "reduce raw data to the eigenstructure and statistics");
    InputOptions reduce_in;
    std::string reduce_out;
    add_input_options(reduce_cmd, reduce_in, false);
    reduce_cmd->add_option("--out", reduce_out, "output path (default stdout)");

    // ---- pl ----
    auto* pl_cmd =
        app.add_subcommand("pl", "evaluate the plausibility curve on a grid");
    InputOptions pl_in;
    std::string pl_out, pl_grid;
    double pl_quad_tol = 1e-9, pl_rho_max = vcim::kDefaultRhoMax;
    add_input_options(pl_cmd, pl_in, true);
    pl_cmd->add_option("--grid", pl_grid, "grid as lo:hi:points");
    pl_cmd->add_option("--quad-tol", pl_quad_tol, "integration tolerance");
    pl_cmd->add_option("--rho-max", pl_rho_max, "upper truncation of rho");
    pl_cmd->add_option("--out", pl_out, "output path (default stdout)");

    // ---- interval ----
    auto* int_cmd = app.add_subcommand(
        "interval", "plausibility interval at a given level");
    InputOptions int_in;
    std::string int_out, int_grid;
    double int_alpha = 0.05, int_quad_tol = 1e-9, int_refine_tol = 1e-6;
    double int_rho_max = vcim::kDefaultRhoMax;
    add_input_options(int_cmd, int_in, true);
    int_cmd->add_option("--alpha", int_alpha, "level in (0,1)");
    int_cmd->add_option("--grid", int_grid, "scan grid as lo:hi:points");
    int_cmd->add_option("--quad-tol", int_quad_tol, "integration tolerance");
    int_cmd->add_option("--refine-tol", int_refine_tol,
                        "bisection tolerance on the bounds");
    int_cmd->add_option("--rho-max", int_rho_max, "upper truncation of rho");
    int_cmd->add_option("--out", int_out, "output path (default stdout)");

    // ---- simulate ----
    auto* sim_cmd = app.add_subcommand(
        "simulate", "coverage/length study over replications");
    std::string sim_pattern, sim_eigen, sim_out, sim_grid;
    double sim_sa2 = 1.0, sim_se2 = 1.0, sim_alpha = 0.05;
    double sim_quad_tol = 1e-9, sim_refine_tol = 1e-6;
    int sim_reps = 1000;
    std::uint64_t sim_seed = 0;
    int sim_threads = default_threads();
    bool sim_timing = false;
    sim_cmd->add_option("--pattern", sim_pattern,
                        "one-way group sizes, e.g. 2,4,4,5");
    sim_cmd->add_option("--eigen", sim_eigen,
                        "eigenstructure 'lambda:mult,...'");
    sim_cmd->add_option("--sigma-a2", sim_sa2, "random-effect variance");
    sim_cmd->add_option("--sigma-e2", sim_se2, "error variance");
    sim_cmd->add_option("--reps", sim_reps, "number of replications");
    sim_cmd->add_option("--alpha", sim_alpha, "interval level");
    sim_cmd->add_option("--seed", sim_seed, "base RNG seed");
    sim_cmd->add_option("--threads", sim_threads,
                        "worker count (0 = hardware; env VC_IM_THREADS sets "
                        "the default)");
    sim_cmd->add_option("--grid", sim_grid, "interval scan grid lo:hi:points");
    sim_cmd->add_option("--quad-tol", sim_quad_tol, "integration tolerance");
    sim_cmd->add_option("--refine-tol", sim_refine_tol, "bisection tolerance");
    sim_cmd->add_flag("--timing", sim_timing,
                      "include wall-clock fields (breaks bit-determinism)");
    sim_cmd->add_option("--out", sim_out, "output path (default stdout)");

    // ---- check ----
    auto* check_cmd = app.add_subcommand(
        "check", "run the oracle diagnostic suite");
    std::uint64_t check_seed = 20240915ULL;
    check_cmd->add_option("--seed", check_seed, "diagnostic RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (reduce_cmd->parsed()) {
        const vcim::EigenReduction red = load_reduction(reduce_in);
        json out;
        out["command"] = "reduce";
        out["config"] = {{"inputs", inputs_echo(reduce_in)},
                         {"cluster_tol", reduce_in.cluster_tol}};
        out["reduction"] = vcim::reduction_to_json(red);
        write_output(reduce_out, out.dump(2) + "\n");
        return kExitOk;
    }

    if (pl_cmd->parsed()) {
        const vcim::EigenReduction red = load_reduction(pl_in);
        vcim::GridSpec grid;
        grid.hi = pl_rho_max;
        if (!pl_grid.empty()) grid = vcim::parse_grid(pl_grid);
        vcim::LawOptions law;
        law.quad_tol = pl_quad_tol;
        const vcim::PlausibilityResult res =
            vcim::pl_curve(red, grid, law, pl_rho_max);

        json cfg = {{"inputs", inputs_echo(pl_in)},
                    {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"points", grid.points}}},
                    {"quad_tol", pl_quad_tol},
                    {"cluster_tol", pl_in.cluster_tol},
                    {"rho_max", pl_rho_max}};
        std::ostringstream os;
        os << "# config: " << json({{"command", "pl"}, {"config", cfg}}).dump()
           << "\n";
        vcim::write_pl_csv(os, res);
        write_output(pl_out, os.str());
        return res.all_points_ok() ? kExitOk : kExitNumerical;
    }

    if (int_cmd->parsed()) {
        const vcim::EigenReduction red = load_reduction(int_in);
        vcim::GridSpec grid;
        grid.hi = int_rho_max;
        if (!int_grid.empty()) grid = vcim::parse_grid(int_grid);
        vcim::LawOptions law;
        law.quad_tol = int_quad_tol;
        const vcim::PlausibilityResult res = vcim::interval(
            red, int_alpha, grid, int_refine_tol, law, int_rho_max);

        json out;
        out["command"] = "interval";
        out["config"] = {{"inputs", inputs_echo(int_in)},
                         {"alpha", int_alpha},
                         {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"points", grid.points}}},
                         {"quad_tol", int_quad_tol},
                         {"refine_tol", int_refine_tol},
                         {"cluster_tol", int_in.cluster_tol},
                         {"rho_max", int_rho_max}};
        out["result"] = vcim::interval_to_json(res);
        write_output(int_out, out.dump(2) + "\n");
        return kExitOk;
    }

    if (sim_cmd->parsed()) {
        vcim::SimConfig config;
        if (!sim_pattern.empty()) {
            const Eigen::VectorXd p = vcim::parse_number_list(sim_pattern);
            for (Eigen::Index i = 0; i < p.size(); ++i) {
                config.pattern.push_back(static_cast<int>(p(i)));
            }
        }
        if (!sim_eigen.empty()) {
            auto [lambdas, mults] = vcim::load_eigen(sim_eigen);
            config.lambdas = lambdas;
            config.mults = mults;
        }
        config.sigma_a2 = sim_sa2;
        config.sigma_e2 = sim_se2;
        config.reps = sim_reps;
        config.alpha = sim_alpha;
        config.seed = sim_seed;
        config.threads = sim_threads;
        if (!sim_grid.empty()) config.grid = vcim::parse_grid(sim_grid);
        config.law.quad_tol = sim_quad_tol;
        config.refine_tol = sim_refine_tol;

        const vcim::StudyResult result = vcim::run_study(config);

        json out;
        out["command"] = "simulate";
        out["config"] = {
            {"pattern", sim_pattern},
            {"eigen", sim_eigen},
            {"sigma_a2", sim_sa2},
            {"sigma_e2", sim_se2},
            {"reps", sim_reps},
            {"alpha", sim_alpha},
            {"seed", sim_seed},
            {"grid", {{"lo", config.grid.lo}, {"hi", config.grid.hi}, {"points", config.grid.points}}},
            {"quad_tol", sim_quad_tol},
            {"refine_tol", sim_refine_tol}};
        out["study"] = vcim::study_to_json(result, sim_timing);
        if (sim_timing) out["threads"] = sim_threads;
        write_output(sim_out, out.dump(2) + "\n");
        return kExitOk;
    }

    if (check_cmd->parsed()) {
        const vcim::oracle::CheckReport report =
            vcim::oracle::run_diagnostics(check_seed);
        for (const auto& item : report.items) {
            std::cout << (item.pass ? "PASS" : "FAIL") << "  " << item.name
                      << "  [" << item.detail << "]\n";
        }
        return report.all_pass() ? kExitOk : kExitNumerical;
    }

    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const vcim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const vcim::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const vcim::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const vcim::OrderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const vcim::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const vcim::RankDeficientError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const vcim::DegenerateModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const vcim::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const vcim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
