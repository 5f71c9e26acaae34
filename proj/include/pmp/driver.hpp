#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pmp/grid.hpp"
#include "pmp/io.hpp"
#include "pmp/models.hpp"
#include "pmp/predict_cd.hpp"
#include "pmp/predict_dd.hpp"
#include "pmp/scenario.hpp"

namespace pmp {

inline LatticeGrid scenario_grid(const Scenario& s) {
    const auto n = static_cast<Eigen::Index>(s.dimension());
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(s.grid.center.data(), n);
    if (s.grid.basis) return LatticeGrid(s.grid.counts, *s.grid.basis, c);
    return LatticeGrid::axis_aligned(s.grid.counts, s.grid.steps, c);
}

inline PointMassDensity initial_pmd(const Scenario& s) {
    const auto grid = scenario_grid(s);
    if (s.initial.kind == "uniform") return pmd_from_density([](const Eigen::VectorXd&) { return 1.0; }, grid);
    const auto n = static_cast<Eigen::Index>(s.dimension());
    const Eigen::VectorXd mean = Eigen::Map<const Eigen::VectorXd>(s.initial.mean.data(), n);
    const GaussianNoise g(s.initial.covariance);
    return pmd_from_density(
        [&](const Eigen::VectorXd& x) {
            const Eigen::VectorXd d = x - mean;
            return g(std::span<const double>(d.data(), d.size()));
        },
        grid);
}

inline DiscreteDynamicsModel make_dd_model(const Scenario& s) {
    if (s.model.noise.kind == "laplace")
        return DiscreteDynamicsModel(s.model.F, std::make_shared<LaplaceNoise>(s.model.noise.scales));
    return DiscreteDynamicsModel::gaussian(s.model.F, s.model.noise.covariance);
}

inline ContinuousDynamicsModel make_cd_model(const Scenario& s) {
    const std::size_t l = s.model.substeps
                              ? *s.model.substeps
                              : default_substeps(s.model.A, s.model.Q, scenario_grid(s), s.model.sampling_period);
    return ContinuousDynamicsModel(s.model.A, s.model.Q, l, s.model.sampling_period);
}

/// One prediction step (propagate then normalize) for a scenario.
class Stepper {
public:
    Stepper(const Scenario& s, std::string predictor)
        : predictor_(std::move(predictor)), inflation_(s.inflation), auto_substeps_(!s.model.substeps) {
        if (predictor_ != "standard" && predictor_ != "efficient")
            throw InvalidArgument("unknown predictor '" + predictor_ + "'");
        if (s.model.kind == "dd") dd_.emplace(make_dd_model(s));
        else cd_.emplace(make_cd_model(s));
    }

    const std::string& predictor() const { return predictor_; }
    std::optional<std::size_t> substeps() const {
        return cd_ ? std::optional<std::size_t>(cd_->substeps()) : std::nullopt;
    }
    const ContinuousDynamicsModel* cd_model() const { return cd_ ? &*cd_ : nullptr; }

    /// Unnormalized prediction; mass() of the result is the retained mass.
    PointMassDensity propagate(const PointMassDensity& pmd) const {
        if (dd_) {
            if (inflation_) {
                const auto inflated = inflate_for_noise(pmd, *dd_, *inflation_);
                return predictor_ == "efficient" ? efficient_dd_propagate(inflated, *dd_)
                                                 : standard_dd_propagate(inflated, *dd_);
            }
            return predictor_ == "efficient" ? efficient_dd_propagate(pmd, *dd_) : standard_dd_propagate(pmd, *dd_);
        }
        // A contracting grid tightens the stability limit from step to step.
        const ContinuousDynamicsModel model =
            auto_substeps_ ? ContinuousDynamicsModel(cd_->A(), cd_->Q(),
                                                     default_substeps(cd_->A(), cd_->Q(), pmd.grid(), cd_->sampling_period()),
                                                     cd_->sampling_period())
                           : *cd_;
        return predictor_ == "efficient" ? efficient_cd_propagate(pmd, model) : standard_cd_propagate(pmd, model);
    }

private:
    std::string predictor_;
    std::optional<double> inflation_;
    bool auto_substeps_;
    std::optional<DiscreteDynamicsModel> dd_;
    std::optional<ContinuousDynamicsModel> cd_;
};

struct StepRecord {
    double mass;     // before renormalization
    double seconds;  // propagate + normalize
};

struct PredictorRun {
    std::string predictor;
    PointMassDensity final;
    std::vector<StepRecord> steps;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline nlohmann::json moments_json(const PointMassDensity& pmd) {
    const auto m = moments(pmd);
    nlohmann::json j;
    j["mean"] = std::vector<double>(m.mean.data(), m.mean.data() + m.mean.size());
    j["covariance"] = to_json(m.covariance);
    return j;
}

inline double max_relative_difference(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::abs(b[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

inline std::vector<std::string> requested_predictors(const Scenario& s) {
    std::vector<std::string> out;
    for (const char* p : {"standard", "efficient"})
        if (s.wants(p)) out.emplace_back(p);
    return out;
}

}  // namespace detail

inline PredictorRun run_predictor(const Scenario& s, const std::string& predictor) {
    const Stepper stepper(s, predictor);
    PointMassDensity pmd = initial_pmd(s);
    std::vector<StepRecord> steps;
    for (std::size_t k = 0; k < s.steps; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        auto raw = stepper.propagate(pmd);
        const double mass = raw.mass();
        pmd = normalize(raw);
        steps.push_back({mass, detail::seconds_since(t0)});
    }
    return {predictor, std::move(pmd), std::move(steps)};
}

/// Runs every requested predictor, writes final_<predictor>.pmd and
/// summary.json into out_dir, and returns the summary.
inline nlohmann::json run_predict(const Scenario& s, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json summary;
    summary["scenario"] = s.name;
    summary["steps"] = s.steps;
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& p : detail::requested_predictors(s)) {
        const auto run = run_predictor(s, p);
        const auto path = (std::filesystem::path(out_dir) / ("final_" + p + ".pmd")).string();
        save_pmd(path, run.final);
        nlohmann::json r = detail::moments_json(run.final);
        r["predictor"] = p;
        r["output"] = path;
        r["counts"] = run.final.grid().counts();
        std::vector<double> mass, secs;
        for (const auto& st : run.steps) {
            mass.push_back(st.mass);
            secs.push_back(st.seconds);
        }
        r["mass_before_normalization"] = mass;
        r["seconds_per_step"] = secs;
        runs.push_back(r);
    }
    summary["runs"] = runs;
    std::ofstream(std::filesystem::path(out_dir) / "summary.json") << summary.dump(2) << '\n';
    return summary;
}

/// Steps both predictors side by side and reports per-step differences.
/// "pass" is true iff every step is within 1e-10 (dd) or 1e-8 (cd).
inline nlohmann::json run_compare(const Scenario& s) {
    const double threshold = s.model.kind == "dd" ? 1e-10 : 1e-8;
    const Stepper standard(s, "standard"), efficient(s, "efficient");
    PointMassDensity a = initial_pmd(s), b = a;
    nlohmann::json steps = nlohmann::json::array();
    bool pass = true;
    for (std::size_t k = 0; k < s.steps; ++k) {
        a = normalize(standard.propagate(a));
        b = normalize(efficient.propagate(b));
        if (!(a.grid() == b.grid())) throw Error("compare: predictors produced different grids");
        const auto ma = moments(a), mb = moments(b);
        nlohmann::json st;
        st["step"] = k + 1;
        st["max_rel_weight_diff"] = detail::max_relative_difference(b.weights(), a.weights());
        st["mean_diff"] = (ma.mean - mb.mean).cwiseAbs().maxCoeff();
        st["covariance_diff"] = (ma.covariance - mb.covariance).cwiseAbs().maxCoeff();
        st["pass"] = st["max_rel_weight_diff"].get<double>() <= threshold;
        pass = pass && st["pass"].get<bool>();
        steps.push_back(st);
    }
    nlohmann::json report;
    report["scenario"] = s.name;
    report["kind"] = s.model.kind;
    report["threshold"] = threshold;
    report["steps"] = steps;
    report["pass"] = pass;
    return report;
}

struct BenchRow {
    std::string predictor;
    std::size_t n_x;
    Counts counts;
    std::size_t N;
    double median_s;
    std::optional<double> ratio;  // standard median / efficient median
};

/// Median single-step time after one warm-up run.
inline double time_one_step(const Stepper& stepper, const PointMassDensity& pmd, std::size_t repeats) {
    (void)stepper.propagate(pmd);
    std::vector<double> t;
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = normalize(stepper.propagate(pmd));
        t.push_back(detail::seconds_since(t0));
    }
    std::sort(t.begin(), t.end());
    const auto m = t.size() / 2;
    return t.size() % 2 ? t[m] : 0.5 * (t[m - 1] + t[m]);
}

/// Same scenario with `per_axis` points on every axis; the grid span is kept.
/// Even counts are bumped to the next odd value.
inline Scenario resized_scenario(const Scenario& s, std::size_t per_axis) {
    if (per_axis == 0) throw InvalidArgument("bench: grid size must be positive");
    if (per_axis % 2 == 0) ++per_axis;
    Scenario out = s;
    for (std::size_t a = 0; a < s.dimension(); ++a) {
        const double old_n = static_cast<double>(s.grid.counts[a]);
        const double scale = old_n > 1 ? (old_n - 1.0) / static_cast<double>(std::max<std::size_t>(per_axis - 1, 1)) : 1.0;
        out.grid.counts[a] = per_axis;
        if (s.grid.basis) out.grid.basis->col(static_cast<Eigen::Index>(a)) *= scale;
        else out.grid.steps[a] *= scale;
    }
    // A fixed substep count may be unstable on the finer grid.
    if (s.model.kind == "cd") out.model.substeps.reset();
    return out;
}

inline std::vector<BenchRow> run_bench(const Scenario& s, std::size_t repeats) {
    if (repeats < 3) throw InvalidArgument("bench: repeats must be at least 3");
    const auto pmd = initial_pmd(s);
    std::vector<BenchRow> rows;
    std::optional<double> standard_median;
    for (const auto& p : detail::requested_predictors(s)) {
        const Stepper stepper(s, p);
        const double med = time_one_step(stepper, pmd, repeats);
        BenchRow row{p, s.dimension(), s.grid.counts, element_count(s.grid.counts), med, std::nullopt};
        if (p == "standard") {
            standard_median = med;
            row.ratio = 1.0;
        } else if (standard_median) {
            row.ratio = *standard_median / med;
        }
        rows.push_back(row);
    }
    return rows;
}

/// Least-squares slope of log(median_s) against log(N) for one predictor.
inline std::optional<double> loglog_slope(const std::vector<BenchRow>& rows, const std::string& predictor) {
    std::vector<double> x, y;
    for (const auto& r : rows)
        if (r.predictor == predictor) {
            x.push_back(std::log(static_cast<double>(r.N)));
            y.push_back(std::log(r.median_s));
        }
    if (x.size() < 2) return std::nullopt;
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
    const auto g6 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };
    std::string out = "predictor,n_x,counts,N,median_s,ratio\n";
    for (const auto& r : rows) {
        out += r.predictor + "," + std::to_string(r.n_x) + "," + format_counts(r.counts) + "," +
               std::to_string(r.N) + "," + g6(r.median_s) + "," +
               (r.ratio ? g6(*r.ratio) : std::string("NA")) + "\n";
    }
    return out;
}

}  // namespace pmp
