#pragma once

// JSON (de)serialization of models and reports. Instances use
// {"n": int, "a": [...], "B": [[...] x n]} with the zero-based column
// convention c = n*j + k; rate files use
// {"n": int, "D0": [[...]], "D1_diag": [...], "death": [...],
//  "P0": [[...]], "P1": [[...]]} and are recognized by the "D0" key.

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mbtq/error_bound.hpp"
#include "mbtq/perturbation.hpp"
#include "mbtq/qve.hpp"
#include "mbtq/simulation.hpp"
#include "mbtq/solve.hpp"

namespace mbtq {

using json = nlohmann::json;

namespace io_detail {

inline const json& field(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end())
        throw std::invalid_argument(std::string("missing field '") + name + "'");
    return *it;
}

inline Vector vector_from(const json& j, const char* name, std::size_t expect = 0) {
    const json& v = field(j, name);
    if (!v.is_array())
        throw std::invalid_argument(std::string("field '") + name + "' must be an array");
    Vector out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(x.get<double>());
    if (expect && out.size() != expect)
        throw std::invalid_argument(std::string("field '") + name + "' has wrong length");
    return out;
}

inline Matrix matrix_from(const json& j, const char* name, std::size_t rows, std::size_t cols) {
    const json& m = field(j, name);
    if (!m.is_array() || m.size() != rows)
        throw std::invalid_argument(std::string("field '") + name + "' must have " +
                                    std::to_string(rows) + " rows");
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!m[i].is_array() || m[i].size() != cols)
            throw std::invalid_argument(std::string("field '") + name + "' row " +
                                        std::to_string(i) + " must have " +
                                        std::to_string(cols) + " entries");
        for (std::size_t c = 0; c < cols; ++c) out(i, c) = m[i][c].get<double>();
    }
    return out;
}

inline json matrix_to(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace io_detail

inline json to_json(const Qve& q) {
    return json{{"n", q.n}, {"a", q.a}, {"B", io_detail::matrix_to(q.B)}};
}

inline Qve qve_from_json(const json& j) {
    const std::size_t n = io_detail::field(j, "n").get<std::size_t>();
    if (n == 0) throw std::invalid_argument("field 'n' must be positive");
    Vector a = io_detail::vector_from(j, "a", n);
    Matrix b = io_detail::matrix_from(j, "B", n, n * n);
    return Qve(std::move(a), std::move(b));
}

inline json to_json(const MbtRates& m) {
    return json{{"n", m.n},
                {"D0", io_detail::matrix_to(m.D0)},
                {"D1_diag", m.D1_diag},
                {"death", m.death},
                {"P0", io_detail::matrix_to(m.P0)},
                {"P1", io_detail::matrix_to(m.P1)}};
}

inline MbtRates rates_from_json(const json& j) {
    MbtRates m;
    m.n = io_detail::field(j, "n").get<std::size_t>();
    if (m.n == 0) throw std::invalid_argument("field 'n' must be positive");
    m.D0 = io_detail::matrix_from(j, "D0", m.n, m.n);
    m.D1_diag = io_detail::vector_from(j, "D1_diag", m.n);
    m.death = io_detail::vector_from(j, "death", m.n);
    m.P0 = io_detail::matrix_from(j, "P0", m.n, m.n);
    m.P1 = io_detail::matrix_from(j, "P1", m.n, m.n);
    return m;
}

/// Reads either an instance file or a rates file (recognized by the
/// "D0" key, converted through from_rates).
inline Qve load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
    }
    if (j.contains("D0")) return from_rates(rates_from_json(j));
    return qve_from_json(j);
}

inline Vector load_vector(const std::string& path, const char* name, std::size_t expect) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
    }
    if (j.is_array()) {
        Vector out;
        for (const auto& x : j) out.push_back(x.get<double>());
        if (expect && out.size() != expect)
            throw std::invalid_argument(std::string("'") + path + "' has wrong length for " + name);
        return out;
    }
    return io_detail::vector_from(j, name, expect);
}

inline Matrix load_matrix(const std::string& path, const char* name, std::size_t rows,
                          std::size_t cols) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
    }
    if (j.is_array()) {
        json wrap;
        wrap[name] = j;
        return io_detail::matrix_from(wrap, name, rows, cols);
    }
    return io_detail::matrix_from(j, name, rows, cols);
}

inline json to_json(const Classification& c) {
    return json{{"rho_R", c.rho_R},
                {"regime", to_string(c.regime)},
                {"positive_regular", c.positive_regular}};
}

inline json to_json(const SolveReport& r, bool with_trace = false) {
    json j{{"method", r.method == SolveMethod::Newton ? "newton" : "depth"},
           {"converged", r.converged},
           {"iterations", r.iterates.empty() ? 0 : r.iterates.size() - 1},
           {"x", r.x},
           {"final_residual", r.residual_norms.empty() ? 0.0 : r.residual_norms.back()},
           {"stability_radius", r.stability_radius},
           {"near_singular", r.near_singular}};
    if (with_trace) {
        j["iterates"] = r.iterates;
        j["residual_norms"] = r.residual_norms;
    }
    return j;
}

inline json to_json(const PerturbationInputs& in) {
    return json{{"delta", in.delta},         {"ell", in.ell},
                {"b_tilde", in.b_tilde},     {"gap_norm", in.gap_norm},
                {"xstar_norm", in.xstar_norm}, {"comp_norm", in.comp_norm}};
}

inline json to_json(const PerturbationReport& r) {
    json j{{"inputs", to_json(r.inputs)},
           {"cond1_ok", r.cond1_ok},
           {"cond2_ok", r.cond2_ok},
           {"xi_star", r.xi_star ? json(*r.xi_star) : json(nullptr)},
           {"first_order_abs", r.first_order_abs},
           {"first_order_rel", r.first_order_rel ? json(*r.first_order_rel) : json(nullptr)},
           {"kappa_tilde", r.kappa_tilde}};
    if (r.seed) j["seed"] = *r.seed;
    if (!r.generator.empty()) j["generator"] = r.generator;
    return j;
}

inline json to_json(const ErrorBoundReport& r) {
    return json{{"gamma", r.gamma},
                {"ell_hat", r.ell_hat},
                {"b_norm", r.b_norm},
                {"con1_ok", r.con1_ok},
                {"con21_ok", r.con21_ok},
                {"con22_ok", r.con22_ok},
                {"omega_star", r.omega_star ? json(*r.omega_star) : json(nullptr)},
                {"estimate", r.estimate}};
}

inline json to_json(const SimulationReport& r) {
    return json{{"estimates", r.estimates}, {"stderr", r.stderrs},
                {"trials", r.trials},       {"censored", r.censored},
                {"seed", r.seed},           {"generator", r.generator}};
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write '" + path + "'");
    out << text;
}

}  // namespace mbtq
