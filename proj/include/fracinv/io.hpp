#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "fracinv/frac_operator.hpp"
#include "fracinv/grid.hpp"
#include "fracinv/measurement.hpp"

namespace fracinv::io {

/// Shortest 17-significant-digit decimal; round-trips every double bit for
/// bit, which the reproducibility contract of the report files relies on.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Two-column "x,value" CSV over every grid node.
void write_field_csv(const std::filesystem::path& path, const ScalarField& field);

/// Reads a field written by write_field_csv; node coordinates must match
/// the grid.
ScalarField read_field_csv(const std::filesystem::path& path, const GridPtr& grid);

/// Interaction weights by lag plus the per-node tail/diagonal columns, for
/// external verification of the assembled operator.
void write_operator_csv(const std::filesystem::path& weights_path,
                        const std::filesystem::path& tails_path, const NonlocalStiffness& op);

/// Per-pair JSON dump of a measurement set (node coordinates included).
void write_measurement_json(const std::filesystem::path& path, const MeasurementSet& set,
                            const GridPtr& grid);

/// Flat "key = value" text config; one key per line, '#' starts a comment,
/// nested keys use dots. Keys are kept sorted for deterministic echo.
class FlatConfig {
public:
    static FlatConfig parse(std::istream& in);
    static FlatConfig parse_file(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.contains(key); }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    void set_double(const std::string& key, double value) { values_[key] = format_double(value); }

    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    /// Whitespace- or comma-separated list of reals.
    std::vector<double> get_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return values_; }
    std::string serialize() const;

private:
    std::map<std::string, std::string> values_;
};

/// Grid geometry as a flat config (half_width, node count, interval
/// endpoints).
FlatConfig grid_config(const Grid& grid);
GridPtr grid_from_config(const FlatConfig& cfg, const std::string& prefix = "grid.");

}  // namespace fracinv::io
