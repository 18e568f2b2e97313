#include "vcim/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "vcim/errors.hpp"

namespace vcim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_real(const std::string& cell, const std::string& where) {
    const std::string t = trim(cell);
    if (t.empty()) throw ParseError(where + ": empty numeric cell");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) {
        throw ParseError(where + ": cannot parse '" + t + "' as a number");
    }
    return v;
}

long parse_int(const std::string& cell, const std::string& where) {
    const std::string t = trim(cell);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) {
        throw ParseError(where + ": cannot parse '" + t + "' as an integer");
    }
    return v;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
    const auto lines = read_lines(path);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cells = split(lines[i], ',');
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& cell : cells) {
            row.push_back(
                parse_real(cell, path + ":" + std::to_string(i + 1)));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(path + ":" + std::to_string(i + 1) +
                             ": ragged row (expected " +
                             std::to_string(rows.front().size()) + " cells)");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": no data rows");
    Eigen::MatrixXd M(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
        }
    }
    return M;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr,
                                 const std::string& name) {
    if (!arr.is_array()) throw ParseError("field '" + name + "' must be an array");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    }
    return v;
}

} // namespace

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

MixedModelSpec load_oneway(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw SchemaError(path + ": empty file");

    const auto header = split(lines[0], ',');
    auto norm = [](std::string s) {
        s = trim(s);
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        return s;
    };
    if (header.size() != 2 || norm(header[0]) != "group" ||
        norm(header[1]) != "value") {
        throw SchemaError(path + ": expected header 'group,value'");
    }

    std::vector<std::string> groups;   // first-appearance order
    std::vector<int> group_of;
    std::vector<double> values;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const auto cells = split(lines[i], ',');
        const std::string where = path + ":" + std::to_string(i + 1);
        if (cells.size() != 2) {
            throw ParseError(where + ": expected 2 cells, got " +
                             std::to_string(cells.size()));
        }
        const std::string label = trim(cells[0]);
        if (label.empty()) throw ParseError(where + ": empty group label");
        auto it = std::find(groups.begin(), groups.end(), label);
        if (it == groups.end()) {
            groups.push_back(label);
            it = std::prev(groups.end());
        }
        group_of.push_back(static_cast<int>(it - groups.begin()));
        values.push_back(parse_real(cells[1], where));
    }

    if (values.size() < 3) {
        throw SchemaError(path + ": need at least 3 data rows");
    }
    if (groups.size() < 2) {
        throw SchemaError(path +
                          ": need at least 2 groups (rho is unidentifiable)");
    }

    const int n = static_cast<int>(values.size());
    const int a = static_cast<int>(groups.size());
    MixedModelSpec model;
    model.y = Eigen::Map<Eigen::VectorXd>(values.data(), n);
    model.X = Eigen::MatrixXd::Ones(n, 1);
    model.Z = Eigen::MatrixXd::Zero(n, a);
    for (int i = 0; i < n; ++i) model.Z(i, group_of[i]) = 1.0;
    model.A = Eigen::MatrixXd::Identity(a, a);
    return model;
}

MixedModelSpec load_general(const std::string& y_path,
                            const std::string& x_path,
                            const std::string& z_path,
                            const std::string& a_path) {
    MixedModelSpec model;
    const Eigen::MatrixXd ymat = read_matrix(y_path);
    if (ymat.cols() != 1) {
        throw DimensionError(y_path + " must be a single column (got " +
                             std::to_string(ymat.cols()) + " columns)");
    }
    model.y = ymat.col(0);
    model.X = read_matrix(x_path);
    model.Z = read_matrix(z_path);

    if (model.X.rows() != model.y.size()) {
        throw DimensionError("X has " + std::to_string(model.X.rows()) +
                             " rows but y has " + std::to_string(model.y.size()));
    }
    if (model.Z.rows() != model.y.size()) {
        throw DimensionError("Z has " + std::to_string(model.Z.rows()) +
                             " rows but y has " + std::to_string(model.y.size()));
    }
    if (a_path.empty()) {
        model.A = Eigen::MatrixXd::Identity(model.Z.cols(), model.Z.cols());
    } else {
        model.A = read_matrix(a_path);
        if (model.A.rows() != model.Z.cols() ||
            model.A.cols() != model.Z.cols()) {
            throw DimensionError(
                "A is " + std::to_string(model.A.rows()) + "x" +
                std::to_string(model.A.cols()) + " but Z has " +
                std::to_string(model.Z.cols()) + " columns");
        }
    }
    model.validate();
    return model;
}

std::pair<Eigen::VectorXd, std::vector<int>>
load_eigen(const std::string& spec_or_path) {
    std::string text = spec_or_path;
    if (text.find(':') == std::string::npos) {
        // No pair separator: treat as a path.
        const auto lines = read_lines(text);
        text.clear();
        for (const auto& line : lines) {
            const std::string t = trim(line);
            if (!t.empty()) {
                text = t;
                break;
            }
        }
        if (text.empty()) {
            throw ParseError(spec_or_path + ": no eigenstructure line found");
        }
    }

    std::vector<double> lambdas;
    std::vector<int> mults;
    for (const auto& pair : split(text, ',')) {
        const auto parts = split(pair, ':');
        if (parts.size() != 2) {
            throw ParseError("eigen pair '" + pair +
                             "' must look like lambda:mult");
        }
        lambdas.push_back(parse_real(parts[0], "eigen spec"));
        const long r = parse_int(parts[1], "eigen spec");
        if (r < 1) throw ParseError("multiplicity must be >= 1 in '" + pair + "'");
        mults.push_back(static_cast<int>(r));
    }

    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
        if (!(lambdas[i] > lambdas[i + 1])) {
            throw OrderError("eigenvalues must be strictly decreasing");
        }
    }
    if (!lambdas.empty() && lambdas.back() < 0.0) {
        throw OrderError("last eigenvalue must be >= 0");
    }
    if (lambdas.size() < 2) {
        throw DegenerateModelError(
            "need at least two distinct eigenvalues in the eigenstructure");
    }

    Eigen::VectorXd lv = Eigen::Map<Eigen::VectorXd>(
        lambdas.data(), static_cast<Eigen::Index>(lambdas.size()));
    return {lv, mults};
}

Eigen::VectorXd parse_number_list(const std::string& text) {
    const auto cells = split(text, ',');
    Eigen::VectorXd v(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = parse_real(cells[i], "number list");
    }
    return v;
}

GridSpec parse_grid(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) {
        throw ConfigError("grid must look like lo:hi:points");
    }
    GridSpec g;
    g.lo = parse_real(parts[0], "grid");
    g.hi = parse_real(parts[1], "grid");
    g.points = static_cast<int>(parse_int(parts[2], "grid"));
    g.validate();
    return g;
}

nlohmann::json reduction_to_json(const EigenReduction& red) {
    nlohmann::json j;
    j["lambdas"] = vector_to_json(red.lambdas);
    j["mults"] = red.mults;
    j["S"] = vector_to_json(red.S);
    j["ratio_x"] = vector_to_json(red.ratio_x);
    j["t_stat"] = red.t_stat;
    return j;
}

EigenReduction reduction_from_json(const nlohmann::json& j) {
    for (const char* key : {"lambdas", "mults", "S"}) {
        if (!j.contains(key)) {
            throw ParseError(std::string("reduction JSON is missing '") + key +
                             "'");
        }
    }
    const Eigen::VectorXd lambdas = vector_from_json(j["lambdas"], "lambdas");
    const Eigen::VectorXd S = vector_from_json(j["S"], "S");
    std::vector<int> mults = j["mults"].get<std::vector<int>>();
    // Ratios are recomputed from S: deterministic and self-consistent.
    return reduction_from_stats(lambdas, mults, S);
}

nlohmann::json interval_to_json(const PlausibilityResult& res) {
    nlohmann::json j;
    j["alpha"] = res.alpha.value_or(0.0);
    j["empty"] = res.empty;
    j["multimodal"] = res.multimodal;
    if (res.empty) {
        j["lower"] = nullptr;
        j["upper"] = nullptr;
        j["psi_lower"] = nullptr;
        j["psi_upper"] = nullptr;
    } else {
        j["lower"] = res.lower;
        j["upper"] = res.upper;
        j["psi_lower"] = rho_to_psi(res.lower);
        j["psi_upper"] = rho_to_psi(res.upper);
    }
    j["failed_points"] = res.failed_points();
    return j;
}

nlohmann::json study_to_json(const StudyResult& result, bool include_timing) {
    nlohmann::json j;
    j["rho_true"] = result.rho_true;
    j["empirical_coverage"] = result.empirical_coverage;
    j["mean_length"] = result.mean_length;
    j["failures"] = result.failures;
    j["reps_total"] = result.reps.size();

    nlohmann::json recs = nlohmann::json::array();
    for (const auto& rec : result.reps) {
        nlohmann::json r;
        r["ok"] = rec.ok;
        if (rec.ok) {
            r["covered"] = rec.covered;
            r["empty"] = rec.empty;
            r["multimodal"] = rec.multimodal;
            if (!rec.empty) {
                r["lower"] = rec.lower;
                r["upper"] = rec.upper;
            }
            r["pl_true"] = rec.pl_true;
        } else {
            r["error"] = rec.error;
        }
        if (include_timing) r["runtime_s"] = rec.runtime_s;
        recs.push_back(std::move(r));
    }
    j["records"] = std::move(recs);
    return j;
}

void write_pl_csv(std::ostream& os, const PlausibilityResult& res) {
    os << "rho,pl\n";
    for (std::size_t i = 0; i < res.grid.size(); ++i) {
        os << format_double(res.grid[i]) << ","
           << format_double(res.pl[i]) << "\n";
    }
}

} // namespace vcim
