#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fracinv/grid.hpp"
#include "fracinv/io.hpp"

namespace fracinv {

inline constexpr const char* kVersion = "0.1.0";

/// Scenario configuration: the parsed flat config plus defaults filled in
/// by the runner. Every effective key is echoed into the report.
struct ExperimentConfig {
    io::FlatConfig values;

    static ExperimentConfig defaults(const std::string& scenario);
    static ExperimentConfig from_file(const std::filesystem::path& path);

    ExperimentConfig with(const std::string& key, const std::string& value) const;
};

/// One declared tolerance: value compared against threshold with `cmp`
/// ("<=", ">=", or "=="), evaluated when the scenario runs.
struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string cmp;
    bool pass = false;
};

struct ScenarioResult {
    std::string scenario;
    bool pass = false;
    std::map<std::string, double> metrics;
    std::vector<Check> checks;
    io::FlatConfig effective;  // full config echo, defaults included
    std::vector<std::pair<std::string, ScalarField>> fields;  // CSV artifacts
};

/// Known scenario names, in the order the suite runs them.
const std::vector<std::string>& scenario_names();

/// The (label, config) list the `suite` verb executes: every scenario with
/// its defaults plus the cubic variant of the polynomial recovery.
std::vector<std::pair<std::string, ExperimentConfig>> suite_configs();

/// Runs one scenario deterministically (fixed config + seed give identical
/// results). Throws on invalid configs, naming the offending keys; forward
/// solver failures surface as exceptions before any file is written.
ScenarioResult run_scenario(const ExperimentConfig& config);

/// Writes summary.json plus one CSV per field into the directory and
/// returns the sorted manifest of written paths.
std::vector<std::filesystem::path> emit_report(const ScenarioResult& result,
                                               const std::filesystem::path& dir);

struct ConvergenceRow {
    int node_count = 0;
    double spacing = 0.0;
    double error = 0.0;
    double order = 0.0;  // vs the previous row; 0 for the first
};

/// Reruns the scenario on each refinement level and tabulates the primary
/// error with pairwise empirical orders. Needs >= 3 distinct levels.
std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& base,
                                              const std::vector<int>& refinements);

}  // namespace fracinv
