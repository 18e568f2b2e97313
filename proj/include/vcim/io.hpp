#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vcim/model.hpp"
#include "vcim/plausibility.hpp"
#include "vcim/reduction.hpp"
#include "vcim/sim.hpp"

namespace vcim {

/// Formats a double with 17 significant digits (lossless round trip).
std::string format_double(double x);

/// One-way CSV with header "group,value"; group labels are arbitrary
/// strings, indicator columns follow first-appearance order.
/// Requires at least 2 groups and 3 rows.
MixedModelSpec load_oneway(const std::string& path);

/// Headerless numeric CSV matrices.  a_path empty selects A = identity.
/// Dimension mismatches name the offending pair.
MixedModelSpec load_general(const std::string& y_path,
                            const std::string& x_path,
                            const std::string& z_path,
                            const std::string& a_path);

/// Parses "lambda:mult,lambda:mult,..." (or a file containing one such
/// line) into an eigenstructure; eigenvalues must be strictly decreasing
/// with the last >= 0 and at least two entries.
std::pair<Eigen::VectorXd, std::vector<int>>
load_eigen(const std::string& spec_or_path);

/// Parses a comma-separated list of reals.
Eigen::VectorXd parse_number_list(const std::string& text);

/// Parses "lo:hi:points" into a validated grid.
GridSpec parse_grid(const std::string& text);

nlohmann::json reduction_to_json(const EigenReduction& red);
EigenReduction reduction_from_json(const nlohmann::json& j);

/// Interval block: alpha, lower/upper on both rho and psi scales, flags.
nlohmann::json interval_to_json(const PlausibilityResult& res);

/// Study block: coverage, mean length, per-rep records.  Wall-clock fields
/// are emitted only when include_timing is set so that the default output
/// is bit-identical across runs and thread counts.
nlohmann::json study_to_json(const StudyResult& result, bool include_timing = false);

/// rho,pl rows with 17-significant-digit values.
void write_pl_csv(std::ostream& os, const PlausibilityResult& res);

} // namespace vcim
