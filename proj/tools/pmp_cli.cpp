// Command-line front end: predict, bench and compare scenario files.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmp/driver.hpp"

namespace {

void warn_if_sheared(const pmp::Scenario& s) {
    if (s.model.kind != "cd") return;
    const pmp::Stepper stepper(s, "standard");
    if (auto msg = pmp::shear_diagnostic(*stepper.cd_model(), pmp::scenario_grid(s))) std::cerr << *msg << '\n';
}

int predict(const std::string& path, const std::string& out_dir) {
    const auto s = pmp::load_scenario(path);
    warn_if_sheared(s);
    const auto summary = pmp::run_predict(s, out_dir);
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int bench(const std::string& path, std::size_t repeats, const std::vector<std::size_t>& sweep) {
    const auto s = pmp::load_scenario(path);
    warn_if_sheared(s);
    std::vector<pmp::BenchRow> rows;
    if (sweep.empty()) {
        rows = pmp::run_bench(s, repeats);
    } else {
        for (auto n : sweep) {
            const auto r = pmp::run_bench(pmp::resized_scenario(s, n), repeats);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        for (const char* p : {"standard", "efficient"})
            if (auto slope = pmp::loglog_slope(rows, p)) std::cerr << "slope " << p << ' ' << *slope << '\n';
    }
    std::cout << pmp::bench_csv(rows);
    return 0;
}

int compare(const std::string& path, bool skip_validation) {
    const auto s = pmp::load_scenario(path, pmp::ParseOptions{!skip_validation});
    warn_if_sheared(s);
    const auto report = pmp::run_compare(s);
    std::cout << report.dump(2) << '\n';
    return report["pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-mass density prediction on lattice grids"};
    app.require_subcommand(1);

    std::string scenario, out_dir = "out";
    std::size_t repeats = 5;
    std::vector<std::size_t> sweep;
    bool skip_validation = false;

    auto* p = app.add_subcommand("predict", "Run the scenario and dump the final densities");
    p->add_option("scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    p->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* b = app.add_subcommand("bench", "Time one prediction step per predictor (CSV on stdout)");
    b->add_option("scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    b->add_option("--repeats", repeats, "Timed repetitions after one warm-up (>= 3)")->capture_default_str();
    b->add_option("--sweep", sweep, "Points per axis to sweep, span kept fixed")->delimiter(',');

    auto* c = app.add_subcommand("compare", "Step both predictors and report differences (JSON)");
    c->add_option("scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    c->add_flag("--debug-skip-validation", skip_validation, "Skip the odd-count scenario check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (p->parsed()) return predict(scenario, out_dir);
        if (b->parsed()) return bench(scenario, repeats, sweep);
        return compare(scenario, skip_validation);
    } catch (const pmp::StabilityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
