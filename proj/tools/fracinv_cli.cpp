// Command-line runner for the experiment scenarios.
//
//   fracinv_cli run <config> [--seed S] [--out DIR] [--override-smallness]
//   fracinv_cli study <config> --refine M1,M2,... [--out DIR]
//   fracinv_cli suite [--seed S] [--out DIR] [--override-smallness]
//   fracinv_cli export-op <config> [--out DIR]
//
// Exit code 0 iff every declared tolerance passed.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fracinv/experiments.hpp"
#include "fracinv/frac_operator.hpp"
#include "fracinv/io.hpp"

namespace fs = std::filesystem;
using namespace fracinv;

namespace {

void apply_overrides(ExperimentConfig& cfg, const std::string& seed, bool override_smallness) {
    if (!seed.empty()) cfg.values.set("seed", seed);
    if (override_smallness) cfg.values.set("override_smallness", "1");
}

void print_result(const ScenarioResult& result, const std::string& label) {
    std::cout << (result.pass ? "[PASS] " : "[FAIL] ") << label << "\n";
    for (const auto& c : result.checks) {
        std::cout << "    " << (c.pass ? "ok  " : "FAIL") << "  " << c.name << " = "
                  << io::format_double(c.value) << " (want " << c.cmp << " "
                  << io::format_double(c.threshold) << ")\n";
    }
}

int run_one(const ExperimentConfig& cfg, const fs::path& out_dir, const std::string& label) {
    ScenarioResult result = run_scenario(cfg);
    auto manifest = emit_report(result, out_dir);
    print_result(result, label);
    std::cout << "    wrote " << manifest.size() << " file(s) under " << out_dir.string() << "\n";
    return result.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"1-D fractional Laplacian forward/inverse experiment runner"};
    app.require_subcommand(1);

    std::string config_path, seed, out = "results";
    bool override_smallness = false;
    std::string refine;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config) {
            sub->add_option("config", config_path, "flat key = value config file")->required();
        }
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out, "output directory (default: results)");
        sub->add_flag("--override-smallness", override_smallness,
                      "accept data outside the well-posedness ball");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run one scenario");
    add_common(run_cmd, true);

    CLI::App* study_cmd = app.add_subcommand("study", "rerun a scenario over grid refinements");
    add_common(study_cmd, true);
    study_cmd->add_option("--refine", refine, "comma-separated node counts, e.g. 201,401,801")
        ->required();

    CLI::App* suite_cmd = app.add_subcommand("suite", "run every acceptance scenario");
    add_common(suite_cmd, false);

    CLI::App* export_cmd = app.add_subcommand("export-op", "dump the assembled operator as CSV");
    add_common(export_cmd, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
            apply_overrides(cfg, seed, override_smallness);
            std::string label = cfg.values.get_or("label", cfg.values.get_or("scenario", "run"));
            return run_one(cfg, fs::path(out) / label, label);
        }

        if (study_cmd->parsed()) {
            ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
            apply_overrides(cfg, seed, override_smallness);
            std::vector<int> levels;
            std::stringstream ss(refine);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                if (!tok.empty()) levels.push_back(std::stoi(tok));
            }
            auto rows = convergence_study(cfg, levels);
            std::ostringstream csv;
            csv << "M,h,error,order\n";
            std::cout << std::left << std::setw(8) << "M" << std::setw(16) << "h" << std::setw(16)
                      << "error" << "order\n";
            for (const auto& r : rows) {
                csv << r.node_count << "," << io::format_double(r.spacing) << ","
                    << io::format_double(r.error) << "," << io::format_double(r.order) << "\n";
                std::cout << std::left << std::setw(8) << r.node_count << std::setw(16)
                          << r.spacing << std::setw(16) << r.error << r.order << "\n";
            }
            fs::create_directories(out);
            io::write_text_file(fs::path(out) / "study.csv", csv.str());
            return 0;
        }

        if (suite_cmd->parsed()) {
            int failures = 0;
            for (const auto& [label, base] : suite_configs()) {
                ExperimentConfig cfg = base;
                apply_overrides(cfg, seed, override_smallness);
                failures += run_one(cfg, fs::path(out) / label, label);
            }
            std::cout << (failures == 0 ? "suite: all scenarios passed\n"
                                        : "suite: FAILURES present\n");
            return failures == 0 ? 0 : 1;
        }

        if (export_cmd->parsed()) {
            ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
            GridPtr grid = io::grid_from_config([&] {
                io::FlatConfig c = cfg.values;
                // reuse scenario defaults for the geometry keys
                c.set("grid.L", cfg.values.get_or("grid.L", "2"));
                c.set("grid.M", cfg.values.get_or("grid.M", "401"));
                c.set("grid.omega.lo", cfg.values.get_or("grid.omega.lo", "-1"));
                c.set("grid.omega.hi", cfg.values.get_or("grid.omega.hi", "1"));
                c.set("grid.w1.lo", cfg.values.get_or("grid.w1.lo", "1.2"));
                c.set("grid.w1.hi", cfg.values.get_or("grid.w1.hi", "1.6"));
                c.set("grid.w2.lo", cfg.values.get_or("grid.w2.lo", "-1.6"));
                c.set("grid.w2.hi", cfg.values.get_or("grid.w2.hi", "-1.2"));
                return c;
            }());
            double s = cfg.values.has("s") ? cfg.values.get_double("s") : 0.5;
            NonlocalStiffness op = NonlocalStiffness::assemble(grid, s);
            fs::create_directories(out);
            io::write_operator_csv(fs::path(out) / "operator_weights.csv",
                                   fs::path(out) / "operator_tails.csv", op);
            std::cout << "wrote operator CSVs under " << out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
