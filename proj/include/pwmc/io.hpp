#pragma once

#include "pwmc/audit.hpp"
#include "pwmc/descent.hpp"
#include "pwmc/network.hpp"
#include "pwmc/pieces.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace pwmc::io {

using nlohmann::json;

/// Shortest text that reads back to the same double.
inline std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

// network JSON: {"layers": [{"in": 2, "out": 2, "relu": true}, ...], "objective": "squared_error"}

inline json network_to_json(const NetworkSpec& net) {
    json layers = json::array();
    for (const auto& l : net.layers) {
        layers.push_back({{"in", l.in_dim}, {"out", l.out_dim}, {"relu", l.relu}});
    }
    return {{"layers", layers}, {"objective", to_string(net.objective.kind)}};
}

inline NetworkSpec network_from_json(const json& j) {
    if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) {
        throw InputError("network JSON needs a \"layers\" array");
    }
    NetworkSpec net;
    std::size_t m = 0;
    for (const auto& l : j["layers"]) {
        const std::string where = "layer " + std::to_string(m);
        if (!l.is_object() || !l.contains("in") || !l.contains("out")) {
            throw InputError(where + " needs \"in\" and \"out\"");
        }
        if (!l["in"].is_number_integer() || !l["out"].is_number_integer()) {
            throw InputError(where + ": \"in\" and \"out\" must be integers");
        }
        LayerSpec spec{l["in"].get<int>(), l["out"].get<int>(), true};
        if (l.contains("relu")) {
            if (!l["relu"].is_boolean()) {
                throw InputError(where + ": \"relu\" must be a boolean");
            }
            spec.relu = l["relu"].get<bool>();
        }
        net.layers.push_back(spec);
        ++m;
    }
    if (j.contains("objective")) {
        if (!j["objective"].is_string()) {
            throw InputError("\"objective\" must be a string");
        }
        net.objective.kind = objective_from_string(j["objective"].get<std::string>());
    }
    net.validate();
    return net;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path);
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw InputError("write to " + path + " failed");
    }
}

inline NetworkSpec load_network(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
    return network_from_json(j);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ',')) {
        const auto a = cell.find_first_not_of(" \t\r");
        const auto b = cell.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? std::string() : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

inline double parse_cell(const std::string& cell, std::size_t line, std::size_t col) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (cell.empty() || used != cell.size() || !std::isfinite(v)) {
        throw InputError("line " + std::to_string(line) + ", column " + std::to_string(col + 1) +
                         ": '" + cell + "' is not a finite number");
    }
    return v;
}

} // namespace detail

/// Dataset CSV with header x0,...,x{n-1},y0,...,y{k-1}.
inline Dataset dataset_from_csv(const std::string& text, const NetworkSpec& net) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    Dataset d;
    bool header = false;
    const auto n = static_cast<std::size_t>(net.input_dim());
    const auto k = static_cast<std::size_t>(net.target_dim());
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (!header) {
            if (cells.size() != n + k) {
                throw InputError("line " + std::to_string(lineno) + ": header has " + std::to_string(cells.size()) +
                                 " columns, network needs " + std::to_string(n + k));
            }
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const std::string want = c < n ? "x" + std::to_string(c) : "y" + std::to_string(c - n);
                if (cells[c] != want) {
                    throw InputError("line " + std::to_string(lineno) + ": expected column '" + want + "', got '" +
                                     cells[c] + "'");
                }
            }
            header = true;
            continue;
        }
        if (cells.size() != n + k) {
            throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(n + k) +
                             " values, got " + std::to_string(cells.size()));
        }
        Vec x(static_cast<Eigen::Index>(n));
        Vec y(static_cast<Eigen::Index>(k));
        for (std::size_t c = 0; c < n + k; ++c) {
            const double v = detail::parse_cell(cells[c], lineno, c);
            (c < n ? x[static_cast<Eigen::Index>(c)] : y[static_cast<Eigen::Index>(c - n)]) = v;
        }
        d.push_back(std::move(x), std::move(y));
    }
    if (!header) {
        throw InputError("dataset CSV has no header");
    }
    d.validate(net);
    return d;
}

inline std::string dataset_to_csv(const Dataset& d) {
    std::ostringstream out;
    const auto n = d.inputs.front().size();
    const auto k = d.targets.front().size();
    for (Eigen::Index c = 0; c < n; ++c) {
        out << (c ? "," : "") << 'x' << c;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        out << ",y" << c;
    }
    out << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (Eigen::Index c = 0; c < n; ++c) {
            out << (c ? "," : "") << num(d.inputs[i][c]);
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            out << ',' << num(d.targets[i][c]);
        }
        out << '\n';
    }
    return out.str();
}

inline Dataset load_dataset(const std::string& path, const NetworkSpec& net) {
    try {
        return dataset_from_csv(read_file(path), net);
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

/// Parameters CSV: one row of numbers (comments starting with # are skipped).
inline Vec params_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            values.push_back(detail::parse_cell(cells[c], lineno, c));
        }
    }
    return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline std::string params_to_csv(const Vec& p) {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        out << (i ? "," : "") << num(p[i]);
    }
    out << '\n';
    return out.str();
}

inline std::string trace_to_csv(const Trace& t, bool with_params) {
    std::ostringstream out;
    out << "iter,objective,step_size,norm_x,boundary_distance";
    const Eigen::Index n = t.records.empty() ? 0 : t.records.front().x.size();
    if (with_params) {
        for (Eigen::Index i = 0; i < n; ++i) {
            out << ",p" << i;
        }
    }
    out << '\n';
    for (const auto& r : t.records) {
        out << r.iter << ',' << num(r.objective) << ',' << num(r.step_size) << ',' << num(r.norm_x) << ','
            << num(r.boundary_distance);
        if (with_params) {
            for (Eigen::Index i = 0; i < n; ++i) {
                out << ',' << num(r.x[i]);
            }
        }
        out << '\n';
    }
    return out.str();
}

inline json vec_to_json(const Vec& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    for (double& x : out) {
        x += 0.0; // -0 prints as 0
    }
    return out;
}

inline json report_to_json(const AuditReport& r) {
    json violations = json::array();
    for (const auto& v : r.violations) {
        violations.push_back({{"location", v.location}, {"magnitude", v.magnitude}});
    }
    json metrics = json::object();
    for (const auto& [k, v] : r.metrics) {
        metrics[k] = v;
    }
    return {{"check", r.check},        {"trials", r.checks_run},     {"violations", violations},
            {"verdict", to_string(r.verdict())}, {"worst_slack", r.worst_slack}, {"metrics", metrics}};
}

inline json pieces_to_json(const std::vector<Piece>& pieces) {
    json out = json::array();
    for (const auto& pc : pieces) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < pc.polytope.rows(); ++i) {
            json row = vec_to_json(pc.polytope.normals().row(i).transpose());
            row.push_back(pc.polytope.offsets()[i] + 0.0);
            rows.push_back(row);
        }
        out.push_back({{"pattern", pc.pattern.to_string()}, {"halfspaces", rows}});
    }
    return out;
}

} // namespace pwmc::io
