#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "mfdlq/error.hpp"
#include "mfdlq/json_writer.hpp"
#include "mfdlq/problem.hpp"

namespace mfdlq {

namespace io {

inline ordered_json to_json(const Matrix& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ordered_json to_json(const Vector& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

inline double number_at(const nlohmann::json& j, const std::string& what) {
    if (!j.is_number()) throw ParseError("'" + what + "' must contain numbers only");
    return j.get<double>();
}

/// Row-major nested array -> matrix, checked against the expected shape.
inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& field, std::size_t rows,
                               std::size_t cols, const std::string& where = {}) {
    if (!j.is_array()) throw ParseError("'" + field + "' must be a nested array");
    const std::size_t got_rows = j.size();
    std::size_t got_cols = got_rows == 0 ? 0 : (j[0].is_array() ? j[0].size() : 0);
    for (const auto& row : j) {
        if (!row.is_array()) throw ParseError("'" + field + "' rows must be arrays");
        if (row.size() != got_cols) throw ParseError("'" + field + "' is ragged");
    }
    if (got_rows != rows || got_cols != cols)
        throw DimensionError(field, rows, cols, got_rows, got_cols, where);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                number_at(j[i][c], field);
    return m;
}

inline Vector vector_from_json(const nlohmann::json& j, const std::string& field, std::size_t len) {
    if (!j.is_array()) throw ParseError("'" + field + "' must be an array");
    if (j.size() != len) throw DimensionError(field, len, 1, j.size(), 1);
    Vector v(static_cast<Eigen::Index>(len));
    for (std::size_t i = 0; i < len; ++i) v(static_cast<Eigen::Index>(i)) = number_at(j[i], field);
    return v;
}

inline std::size_t positive_int(const nlohmann::json& doc, const char* key) {
    if (!doc.contains(key)) throw MissingFieldError(key);
    const auto& v = doc[key];
    if (!v.is_number_integer() || v.get<long long>() < 1)
        throw ParseError(std::string("'") + key + "' must be a positive integer");
    return v.get<std::size_t>();
}

inline StageData stage_from_json(const nlohmann::json& j, std::size_t n, std::size_t r,
                                 const std::string& where) {
    if (!j.is_object()) throw ParseError(where + " must be an object");
    StageData s = StageData::zero(n, r);
    auto req = [&](const char* key, Matrix& dst, std::size_t rows, std::size_t cols) {
        if (!j.contains(key)) throw MissingFieldError(where + "." + key);
        dst = matrix_from_json(j[key], key, rows, cols, where);
    };
    auto opt = [&](const char* key, Matrix& dst, std::size_t rows, std::size_t cols) {
        if (j.contains(key) && !j[key].is_null()) dst = matrix_from_json(j[key], key, rows, cols, where);
    };
    req("A", s.A, n, n);
    opt("Abar", s.Abar, n, n);
    req("B", s.B, n, r);
    opt("C", s.C, n, n);
    opt("Cbar", s.Cbar, n, n);
    opt("D", s.D, n, r);
    req("Q", s.Q, n, n);
    opt("Qbar", s.Qbar, n, n);
    req("R", s.R, r, r);
    opt("Rbar", s.Rbar, r, r);
    s.Q = linalg::symmetrize(s.Q);
    s.Qbar = linalg::symmetrize(s.Qbar);
    s.R = linalg::symmetrize(s.R);
    s.Rbar = linalg::symmetrize(s.Rbar);
    return s;
}

inline ordered_json stage_to_json(const StageData& s) {
    ordered_json j;
    j["A"] = to_json(s.A);
    j["Abar"] = to_json(s.Abar);
    j["B"] = to_json(s.B);
    j["C"] = to_json(s.C);
    j["Cbar"] = to_json(s.Cbar);
    j["D"] = to_json(s.D);
    j["Q"] = to_json(s.Q);
    j["Qbar"] = to_json(s.Qbar);
    j["R"] = to_json(s.R);
    j["Rbar"] = to_json(s.Rbar);
    return j;
}

inline std::string noise_kind_name(NoiseKind k) {
    return k == NoiseKind::Gaussian ? "gaussian" : "rademacher";
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

}  // namespace io

/// Parses a problem document. Optional matrices default to zero, weights are
/// symmetrized, and a single `stage` object is reused for all N stages.
inline ProblemSpec load_problem(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed problem file: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("problem file must be a JSON object");

    ProblemSpec spec;
    spec.n = io::positive_int(doc, "n");
    spec.r = io::positive_int(doc, "r");
    spec.N = io::positive_int(doc, "N");
    const std::size_t n = spec.n, r = spec.r;

    if (!doc.contains("x0")) throw MissingFieldError("x0");
    spec.x0 = io::vector_from_json(doc["x0"], "x0", n);

    if (!doc.contains("noise")) throw MissingFieldError("noise");
    const auto& noise = doc["noise"];
    if (!noise.is_object() || !noise.contains("kind")) throw MissingFieldError("noise.kind");
    const auto kind = noise["kind"].is_string() ? noise["kind"].get<std::string>() : std::string();
    if (kind == "gaussian")
        spec.noise.kind = NoiseKind::Gaussian;
    else if (kind == "rademacher")
        spec.noise.kind = NoiseKind::Rademacher;
    else
        throw ParseError("noise.kind must be \"gaussian\" or \"rademacher\"");
    if (noise.contains("variance")) {
        spec.noise.variance = io::number_at(noise["variance"], "noise.variance");
        if (!(spec.noise.variance > 0.0)) throw ParseError("noise.variance must be positive");
    }

    if (!doc.contains("terminal")) throw MissingFieldError("terminal");
    const auto& term = doc["terminal"];
    if (!term.is_object() || !term.contains("Q")) throw MissingFieldError("terminal.Q");
    spec.terminalQ = linalg::symmetrize(io::matrix_from_json(term["Q"], "Q", n, n, "terminal"));
    spec.terminalQbar = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    if (term.contains("Qbar") && !term["Qbar"].is_null())
        spec.terminalQbar =
            linalg::symmetrize(io::matrix_from_json(term["Qbar"], "Qbar", n, n, "terminal"));

    const bool has_stages = doc.contains("stages");
    const bool has_stage = doc.contains("stage");
    if (has_stages == has_stage)
        throw ParseError("exactly one of 'stages' or 'stage' must be present");
    if (has_stages) {
        const auto& arr = doc["stages"];
        if (!arr.is_array()) throw ParseError("'stages' must be an array");
        if (arr.size() != spec.N)
            throw DimensionError("stages", spec.N, 1, arr.size(), 1);
        for (std::size_t k = 0; k < spec.N; ++k)
            spec.stages.push_back(io::stage_from_json(arr[k], n, r, "stages[" + std::to_string(k) + "]"));
    } else {
        const StageData s = io::stage_from_json(doc["stage"], n, r, "stage");
        spec.stages.assign(spec.N, s);
    }
    return spec;
}

inline ProblemSpec load_problem_file(const std::string& path) {
    return load_problem(io::read_file(path));
}

/// Full (per-stage) problem document; inverse of load_problem.
inline std::string serialize_problem(const ProblemSpec& spec) {
    io::ordered_json doc;
    doc["n"] = spec.n;
    doc["r"] = spec.r;
    doc["N"] = spec.N;
    doc["x0"] = io::to_json(spec.x0);
    doc["noise"] = {{"kind", io::noise_kind_name(spec.noise.kind)},
                    {"variance", spec.noise.variance}};
    io::ordered_json term;
    term["Q"] = io::to_json(spec.terminalQ);
    term["Qbar"] = io::to_json(spec.terminalQbar);
    doc["terminal"] = std::move(term);
    io::ordered_json stages = io::ordered_json::array();
    for (const auto& s : spec.stages) stages.push_back(io::stage_to_json(s));
    doc["stages"] = std::move(stages);
    return io::dump(doc);
}

}  // namespace mfdlq
