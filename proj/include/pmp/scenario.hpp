#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pmp/error.hpp"
#include "pmp/tensor.hpp"

namespace pmp {

struct NoiseSpec {
    std::string kind = "gaussian";  // gaussian | laplace
    Eigen::MatrixXd covariance;     // gaussian
    std::vector<double> scales;     // laplace
};

struct ModelSpec {
    std::string kind;  // dd | cd
    Eigen::MatrixXd F;
    NoiseSpec noise;
    Eigen::MatrixXd A;
    Eigen::MatrixXd Q;
    std::optional<std::size_t> substeps;
    double sampling_period = 1.0;
};

struct GridSpec {
    Counts counts;
    std::vector<double> steps;
    std::vector<double> center;
    std::optional<Eigen::MatrixXd> basis;  // overrides steps when present
};

struct InitialSpec {
    std::string kind = "gaussian";  // gaussian | uniform
    std::vector<double> mean;
    Eigen::MatrixXd covariance;
};

struct Scenario {
    std::string name;
    ModelSpec model;
    GridSpec grid;
    InitialSpec initial;
    std::size_t steps = 1;
    std::string predictor = "both";  // standard | efficient | both
    std::optional<double> inflation;

    std::size_t dimension() const { return grid.counts.size(); }
    bool wants(const std::string& p) const { return predictor == "both" || predictor == p; }
};

inline bool operator==(const NoiseSpec& a, const NoiseSpec& b) {
    return a.kind == b.kind && a.covariance == b.covariance && a.scales == b.scales;
}
inline bool operator==(const ModelSpec& a, const ModelSpec& b) {
    return a.kind == b.kind && a.F == b.F && a.noise == b.noise && a.A == b.A && a.Q == b.Q &&
           a.substeps == b.substeps && a.sampling_period == b.sampling_period;
}
inline bool operator==(const GridSpec& a, const GridSpec& b) {
    if (a.basis.has_value() != b.basis.has_value()) return false;
    if (a.basis && *a.basis != *b.basis) return false;
    return a.counts == b.counts && a.steps == b.steps && a.center == b.center;
}
inline bool operator==(const InitialSpec& a, const InitialSpec& b) {
    return a.kind == b.kind && a.mean == b.mean && a.covariance == b.covariance;
}
inline bool operator==(const Scenario& a, const Scenario& b) {
    return a.name == b.name && a.model == b.model && a.grid == b.grid && a.initial == b.initial &&
           a.steps == b.steps && a.predictor == b.predictor && a.inflation == b.inflation;
}

struct ParseOptions {
    bool require_odd_counts = true;  // when an efficient predictor is requested
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void field_error(const std::string& field, const std::string& what) {
    throw InvalidArgument("scenario: " + field + ": " + what);
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) field_error(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) field_error(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline double read_real(const json& j, const std::string& field) {
    if (!j.is_number()) field_error(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) field_error(field, "must be finite");
    return v;
}

inline std::vector<double> read_vector(const json& j, const std::string& field, std::size_t n) {
    if (!j.is_array()) field_error(field, "expected an array");
    if (n != 0 && j.size() != n)
        field_error(field, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(read_real(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline Eigen::MatrixXd read_matrix(const json& j, const std::string& field, std::size_t n) {
    if (!j.is_array() || j.size() != n)
        field_error(field, "expected " + std::to_string(n) + "x" + std::to_string(n) + " matrix (array of rows)");
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd M(ni, ni);
    for (std::size_t r = 0; r < n; ++r) {
        const auto row = read_vector(j[r], field + "[" + std::to_string(r) + "]", n);
        for (std::size_t c = 0; c < n; ++c) M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    return M;
}

inline std::string read_choice(const json& j, const std::string& field, std::initializer_list<const char*> options) {
    if (!j.is_string()) field_error(field, "expected a string");
    const auto s = j.get<std::string>();
    std::string listed;
    for (auto o : options) {
        if (s == o) return s;
        listed += (listed.empty() ? "" : ", ") + std::string(o);
    }
    field_error(field, "'" + s + "' is not one of " + listed);
}

inline std::size_t read_count(const json& j, const std::string& field, std::size_t min) {
    if (!j.is_number_integer() || j.get<long long>() < static_cast<long long>(min))
        field_error(field, "expected an integer >= " + std::to_string(min));
    return j.get<std::size_t>();
}

inline void check_covariance(const Eigen::MatrixXd& M, const std::string& field, bool allow_singular) {
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
        field_error(field, "must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    if (allow_singular ? lo < -1e-12 : !(lo > 0.0))
        field_error(field, allow_singular ? "must be positive semidefinite" : "must be positive definite");
}

inline json to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& root, const ParseOptions& options = {}) {
    using namespace detail;
    Scenario s;
    if (!root.is_object()) field_error("<root>", "expected an object");
    if (root.contains("name")) {
        if (!root["name"].is_string()) field_error("name", "expected a string");
        s.name = root["name"].get<std::string>();
    }

    const auto& grid = require(root, "grid", "");
    const auto& counts = require(grid, "counts", "grid");
    if (!counts.is_array() || counts.empty()) field_error("grid.counts", "expected a non-empty array");
    for (std::size_t i = 0; i < counts.size(); ++i)
        s.grid.counts.push_back(read_count(counts[i], "grid.counts[" + std::to_string(i) + "]", 1));
    const auto n = s.grid.counts.size();
    s.grid.center = read_vector(require(grid, "center", "grid"), "grid.center", n);
    if (grid.contains("basis")) {
        s.grid.basis = read_matrix(grid["basis"], "grid.basis", n);
        if (std::abs(s.grid.basis->determinant()) == 0.0) field_error("grid.basis", "must be nonsingular");
    } else {
        s.grid.steps = read_vector(require(grid, "steps", "grid"), "grid.steps", n);
        for (std::size_t i = 0; i < n; ++i)
            if (!(s.grid.steps[i] > 0.0)) field_error("grid.steps[" + std::to_string(i) + "]", "must be positive");
    }

    const auto& model = require(root, "model", "");
    s.model.kind = read_choice(require(model, "kind", "model"), "model.kind", {"dd", "cd"});
    if (s.model.kind == "dd") {
        s.model.F = read_matrix(require(model, "F", "model"), "model.F", n);
        if (std::abs(s.model.F.determinant()) == 0.0) field_error("model.F", "must be nonsingular");
        const auto& noise = require(model, "noise", "model");
        s.model.noise.kind = read_choice(require(noise, "kind", "model.noise"), "model.noise.kind", {"gaussian", "laplace"});
        if (s.model.noise.kind == "gaussian") {
            s.model.noise.covariance = read_matrix(require(noise, "covariance", "model.noise"), "model.noise.covariance", n);
            check_covariance(s.model.noise.covariance, "model.noise.covariance", false);
        } else {
            s.model.noise.scales = read_vector(require(noise, "scales", "model.noise"), "model.noise.scales", n);
            for (std::size_t i = 0; i < n; ++i)
                if (!(s.model.noise.scales[i] > 0.0))
                    field_error("model.noise.scales[" + std::to_string(i) + "]", "must be positive");
        }
    } else {
        s.model.A = read_matrix(require(model, "A", "model"), "model.A", n);
        s.model.Q = read_matrix(require(model, "Q", "model"), "model.Q", n);
        if (!s.model.Q.isDiagonal(0.0)) field_error("model.Q", "must be diagonal");
        for (Eigen::Index i = 0; i < s.model.Q.rows(); ++i)
            if (s.model.Q(i, i) < 0.0) field_error("model.Q", "diagonal must be >= 0");
        if (model.contains("substeps")) s.model.substeps = read_count(model["substeps"], "model.substeps", 1);
        if (model.contains("sampling_period")) {
            s.model.sampling_period = read_real(model["sampling_period"], "model.sampling_period");
            if (!(s.model.sampling_period > 0.0)) field_error("model.sampling_period", "must be positive");
        }
    }

    const auto& initial = require(root, "initial", "");
    s.initial.kind = read_choice(require(initial, "kind", "initial"), "initial.kind", {"gaussian", "uniform"});
    if (s.initial.kind == "gaussian") {
        s.initial.mean = read_vector(require(initial, "mean", "initial"), "initial.mean", n);
        s.initial.covariance = read_matrix(require(initial, "covariance", "initial"), "initial.covariance", n);
        check_covariance(s.initial.covariance, "initial.covariance", false);
    }

    s.steps = read_count(require(root, "steps", ""), "steps", 0);
    if (root.contains("predictor"))
        s.predictor = read_choice(root["predictor"], "predictor", {"standard", "efficient", "both"});
    if (root.contains("inflation")) {
        if (s.model.kind != "dd") field_error("inflation", "only applies to dd models");
        s.inflation = read_real(root["inflation"], "inflation");
        if (!(*s.inflation > 0.0)) field_error("inflation", "must be positive");
    }

    if (options.require_odd_counts && (s.wants("efficient") || s.inflation) && !all_odd(s.grid.counts))
        field_error("grid.counts", format_counts(s.grid.counts) + " must be odd for the efficient predictor");
    return s;
}

inline nlohmann::json serialize_scenario(const Scenario& s) {
    using detail::to_json;
    nlohmann::json root;
    root["name"] = s.name;
    nlohmann::json grid;
    grid["counts"] = s.grid.counts;
    grid["center"] = s.grid.center;
    if (s.grid.basis) grid["basis"] = to_json(*s.grid.basis);
    else grid["steps"] = s.grid.steps;
    root["grid"] = grid;

    nlohmann::json model;
    model["kind"] = s.model.kind;
    if (s.model.kind == "dd") {
        model["F"] = to_json(s.model.F);
        nlohmann::json noise;
        noise["kind"] = s.model.noise.kind;
        if (s.model.noise.kind == "gaussian") noise["covariance"] = to_json(s.model.noise.covariance);
        else noise["scales"] = s.model.noise.scales;
        model["noise"] = noise;
    } else {
        model["A"] = to_json(s.model.A);
        model["Q"] = to_json(s.model.Q);
        if (s.model.substeps) model["substeps"] = *s.model.substeps;
        model["sampling_period"] = s.model.sampling_period;
    }
    root["model"] = model;

    nlohmann::json initial;
    initial["kind"] = s.initial.kind;
    if (s.initial.kind == "gaussian") {
        initial["mean"] = s.initial.mean;
        initial["covariance"] = to_json(s.initial.covariance);
    }
    root["initial"] = initial;
    root["steps"] = s.steps;
    root["predictor"] = s.predictor;
    if (s.inflation) root["inflation"] = *s.inflation;
    return root;
}

inline Scenario load_scenario(const std::string& path, const ParseOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("scenario: " + path + ": " + e.what());
    }
    return parse_scenario(j, options);
}

}  // namespace pmp
