#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "pmp/driver.hpp"

namespace pmp {
namespace {

using nlohmann::json;

json dd_json() {
    return json::parse(R"({
        "name": "dd-shear",
        "model": {"kind": "dd", "F": [[1.0, 0.1], [0.0, 0.95]],
                  "noise": {"kind": "gaussian", "covariance": [[0.1, 0.02], [0.02, 0.08]]}},
        "grid": {"counts": [15, 13], "steps": [0.4, 0.45], "center": [0.1, -0.2]},
        "initial": {"kind": "gaussian", "mean": [0.2, 0.0], "covariance": [[1.0, 0.1], [0.1, 0.8]]},
        "steps": 2,
        "predictor": "both"
    })");
}

json cd_json() {
    return json::parse(R"({
        "name": "ou",
        "model": {"kind": "cd", "A": [[-0.5]], "Q": [[0.4]], "substeps": 100},
        "grid": {"counts": [81], "steps": [0.15], "center": [0.0]},
        "initial": {"kind": "gaussian", "mean": [1.0], "covariance": [[1.0]]},
        "steps": 1,
        "predictor": "both"
    })");
}

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("pmp_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

TEST(PmdIo, RoundTripIsExact) {
    Eigen::MatrixXd B(2, 2);
    B << 0.1, 0.03, -0.02, 0.3 / 7.0;
    const LatticeGrid g({3, 5}, B, Eigen::Vector2d(1.0 / 3.0, -2.5));
    std::vector<double> w(15);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(-0.1 * static_cast<double>(i)) / 3.0;
    const PointMassDensity pmd(g, w);
    std::stringstream ss;
    write_pmd(ss, pmd);
    const auto back = read_pmd(ss);
    EXPECT_EQ(back.grid(), g);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(back.weights()[i], w[i]);
}

TEST(PmdIo, RejectsMalformedInput) {
    std::stringstream missing("nx 1\ncounts 3\nbasis 1\ncenter 0\nweights 1 2\n");
    EXPECT_THROW(read_pmd(missing), InvalidArgument);
    std::stringstream wrong_key("nx 1\nsizes 3\n");
    EXPECT_THROW(read_pmd(wrong_key), InvalidArgument);
    std::stringstream garbage("nx 1\ncounts 3\nbasis 1\ncenter 0\nweights 1 2 x\n");
    EXPECT_THROW(read_pmd(garbage), InvalidArgument);
}

TEST(ScenarioParse, RoundTrip) {
    for (const auto& j : {dd_json(), cd_json()}) {
        const auto s = parse_scenario(j);
        const auto again = parse_scenario(json::parse(serialize_scenario(s).dump()));
        EXPECT_EQ(s, again);
    }
    auto laplace = dd_json();
    laplace["model"]["noise"] = json::parse(R"({"kind": "laplace", "scales": [0.3, 0.2]})");
    laplace["grid"].erase("steps");
    laplace["grid"]["basis"] = json::parse("[[0.4, 0.1], [0.0, 0.45]]");
    laplace["inflation"] = 2.5;
    const auto s = parse_scenario(laplace);
    EXPECT_EQ(s, parse_scenario(json::parse(serialize_scenario(s).dump())));
}

void expect_field_error(const json& j, const std::string& field) {
    try {
        parse_scenario(j);
        FAIL() << "expected an error mentioning " << field;
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
}

TEST(ScenarioParse, FieldLevelErrors) {
    auto j = dd_json();
    j["model"]["F"] = json::parse("[[1.0, 0.0]]");
    expect_field_error(j, "model.F");

    j = dd_json();
    j["grid"]["counts"] = json::parse("[15, 12]");
    expect_field_error(j, "grid.counts");

    j = dd_json();
    j["grid"]["center"] = json::parse("[0.0]");
    expect_field_error(j, "grid.center");

    j = dd_json();
    j["initial"]["covariance"] = json::parse("[[1.0, 2.0], [2.0, 1.0]]");
    expect_field_error(j, "initial.covariance");

    j = dd_json();
    j["predictor"] = "fastest";
    expect_field_error(j, "predictor");

    j = dd_json();
    j.erase("steps");
    expect_field_error(j, "steps");

    j = cd_json();
    j["model"]["Q"] = json::parse("[[-0.4]]");
    expect_field_error(j, "model.Q");

    j = cd_json();
    j["inflation"] = 3.0;
    expect_field_error(j, "inflation");
}

TEST(ScenarioParse, EvenCountsAllowedForStandardOnly) {
    auto j = dd_json();
    j["grid"]["counts"] = json::parse("[14, 12]");
    j["predictor"] = "standard";
    EXPECT_NO_THROW(parse_scenario(j));
}

TEST(Driver, ZeroStepsReturnsInitialDensity) {
    auto j = dd_json();
    j["steps"] = 0;
    const auto s = parse_scenario(j);
    const auto dir = temp_dir("zero");
    run_predict(s, dir.string());
    const auto initial = initial_pmd(s);
    for (const char* p : {"standard", "efficient"}) {
        const auto out = load_pmd((dir / (std::string("final_") + p + ".pmd")).string());
        EXPECT_EQ(out.grid(), initial.grid());
        for (std::size_t i = 0; i < initial.weights().size(); ++i) EXPECT_EQ(out.weights()[i], initial.weights()[i]);
    }
}

TEST(Driver, BothPredictorsAgreeInDumps) {
    const auto s = parse_scenario(dd_json());
    const auto dir = temp_dir("both");
    const auto summary = run_predict(s, dir.string());
    ASSERT_EQ(summary["runs"].size(), 2U);
    for (const auto& r : summary["runs"]) {
        EXPECT_EQ(r["mass_before_normalization"].size(), 2U);
        EXPECT_EQ(r["seconds_per_step"].size(), 2U);
        for (double m : r["mass_before_normalization"]) EXPECT_LE(m, 1.0 + 1e-9);
    }
    const auto a = load_pmd((dir / "final_standard.pmd").string());
    const auto b = load_pmd((dir / "final_efficient.pmd").string());
    EXPECT_LE(detail::max_relative_difference(b.weights(), a.weights()), 1e-10);
    EXPECT_TRUE(std::filesystem::exists(dir / "summary.json"));
}

TEST(Driver, CompareReportsPass) {
    const auto dd = run_compare(parse_scenario(dd_json()));
    EXPECT_TRUE(dd["pass"].get<bool>());
    EXPECT_EQ(dd["steps"].size(), 2U);
    EXPECT_LT(dd["steps"][1]["max_rel_weight_diff"].get<double>(), 1e-10);

    const auto cd = run_compare(parse_scenario(cd_json()));
    EXPECT_TRUE(cd["pass"].get<bool>());
    EXPECT_LT(cd["steps"][0]["max_rel_weight_diff"].get<double>(), 1e-8);
}

TEST(Driver, CompareWithInflationKeepsGridsAligned) {
    auto j = dd_json();
    j["inflation"] = 3.0;
    j["model"]["noise"]["covariance"] = json::parse("[[2.0, 0.0], [0.0, 2.0]]");
    const auto report = run_compare(parse_scenario(j));
    EXPECT_TRUE(report["pass"].get<bool>());
}

TEST(Driver, EvenCountsForcedThroughRejectedByPredictor) {
    auto j = dd_json();
    j["grid"]["counts"] = json::parse("[14, 12]");
    EXPECT_THROW(parse_scenario(j), InvalidArgument);
    const auto s = parse_scenario(j, ParseOptions{false});
    EXPECT_THROW(run_compare(s), InvalidArgument);
}

TEST(Driver, UnstableContinuousScenarioNamesAxis) {
    auto j = cd_json();
    j["model"]["substeps"] = 2;
    const auto s = parse_scenario(j);
    try {
        run_compare(s);
        FAIL() << "expected StabilityError";
    } catch (const StabilityError& e) {
        EXPECT_EQ(e.axis(), 0U);
        EXPECT_NE(std::string(e.what()).find("axis 0"), std::string::npos);
    }
}

TEST(Driver, DefaultSubstepsWhenOmitted) {
    auto j = cd_json();
    j["model"].erase("substeps");
    const auto s = parse_scenario(j);
    const Stepper stepper(s, "efficient");
    ASSERT_TRUE(stepper.substeps());
    EXPECT_NO_THROW(check_cd_stability(*stepper.cd_model(), scenario_grid(s)));
    EXPECT_TRUE(run_compare(s)["pass"].get<bool>());
}

TEST(Driver, BenchCsvAndSweep) {
    auto j = dd_json();
    j["grid"]["counts"] = json::parse("[9, 9]");
    const auto s = parse_scenario(j);
    const auto rows = run_bench(s, 3);
    ASSERT_EQ(rows.size(), 2U);
    EXPECT_EQ(rows[0].predictor, "standard");
    EXPECT_EQ(rows[1].N, 81U);
    ASSERT_TRUE(rows[1].ratio);
    const auto csv = bench_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "predictor,n_x,counts,N,median_s,ratio");
    EXPECT_NE(csv.find("efficient,2,9x9,81,"), std::string::npos);
    EXPECT_THROW(run_bench(s, 2), InvalidArgument);

    const auto resized = resized_scenario(s, 16);
    EXPECT_EQ(resized.grid.counts, (Counts{17, 17}));
    EXPECT_NEAR(resized.grid.steps[0] * 16, s.grid.steps[0] * 8, 1e-12);
}

TEST(Driver, LogLogSlope) {
    std::vector<BenchRow> rows;
    for (std::size_t N : {100, 200, 400, 800})
        rows.push_back({"standard", 1, {N}, N, 1e-6 * static_cast<double>(N * N), std::nullopt});
    EXPECT_NEAR(*loglog_slope(rows, "standard"), 2.0, 1e-12);
    EXPECT_FALSE(loglog_slope(rows, "efficient"));
}

}  // namespace
}  // namespace pmp
