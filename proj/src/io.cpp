#include "fracinv/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fracinv::io {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& field) {
    std::ostringstream os;
    os << "x,value\n";
    const auto& grid = *field.grid();
    for (int i = 0; i < grid.size(); ++i) {
        os << format_double(grid.node(i)) << "," << format_double(field[i]) << "\n";
    }
    write_text_file(path, os.str());
}

ScalarField read_field_csv(const std::filesystem::path& path, const GridPtr& grid) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open field CSV: " + path.string());
    }
    std::string line;
    std::getline(in, line);  // header
    ScalarField f(grid);
    int i = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (i >= grid->size()) {
            throw std::runtime_error("field CSV has more rows than grid nodes: " + path.string());
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error("malformed field CSV row: " + line);
        }
        double x = std::stod(line.substr(0, comma));
        double v = std::stod(line.substr(comma + 1));
        if (std::abs(x - grid->node(i)) > 1e-12 * std::max(1.0, std::abs(grid->node(i)))) {
            std::ostringstream os;
            os << "field CSV node mismatch at row " << i << ": " << x << " vs "
               << grid->node(i);
            throw std::runtime_error(os.str());
        }
        f[i] = v;
        ++i;
    }
    if (i != grid->size()) {
        throw std::runtime_error("field CSV has fewer rows than grid nodes: " + path.string());
    }
    return f;
}

void write_operator_csv(const std::filesystem::path& weights_path,
                        const std::filesystem::path& tails_path, const NonlocalStiffness& op) {
    const int n = op.grid()->size();
    {
        std::ostringstream os;
        os << "lag,weight\n";
        for (int m = 1; m <= n - 2; ++m) {
            os << m << "," << format_double(op.lag_weight(m)) << "\n";
        }
        write_text_file(weights_path, os.str());
    }
    {
        std::ostringstream os;
        os << "node,x,tail,diagonal\n";
        for (int i = 1; i <= n - 2; ++i) {
            os << i << "," << format_double(op.grid()->node(i)) << ","
               << format_double(op.tail(i)) << "," << format_double(op.diagonal(i)) << "\n";
        }
        write_text_file(tails_path, os.str());
    }
}

void write_measurement_json(const std::filesystem::path& path, const MeasurementSet& set,
                            const GridPtr& grid) {
    nlohmann::ordered_json root;
    root["noise_level"] = set.noise_level;
    root["separation"] = set.separation;
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    std::vector<double> w1x, w2x;
    for (int j : grid->w1_nodes()) w1x.push_back(grid->node(j));
    for (int j : grid->w2_nodes()) w2x.push_back(grid->node(j));
    for (const auto& p : set.pairs) {
        nlohmann::ordered_json jp;
        jp["input_id"] = p.input_id;
        jp["passive"] = p.passive;
        jp["w1_nodes"] = w1x;
        jp["dirichlet"] = p.dirichlet;
        jp["w2_nodes"] = w2x;
        jp["neumann"] = p.neumann;
        pairs.push_back(jp);
    }
    root["pairs"] = pairs;
    write_text_file(path, root.dump(2) + "\n");
}

FlatConfig FlatConfig::parse(std::istream& in) {
    FlatConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto strip = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        std::string stripped = strip(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config line " << lineno << " has no '=': " << stripped;
            throw std::invalid_argument(os.str());
        }
        std::string key = strip(stripped.substr(0, eq));
        std::string value = strip(stripped.substr(eq + 1));
        if (key.empty()) {
            std::ostringstream os;
            os << "config line " << lineno << " has an empty key";
            throw std::invalid_argument(os.str());
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

FlatConfig FlatConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config: " + path.string());
    }
    return parse(in);
}

const std::string& FlatConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw std::invalid_argument("missing config key: " + key);
    }
    return it->second;
}

std::string FlatConfig::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double FlatConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw std::invalid_argument("config key " + key + " is not a real number: " + v);
    }
}

int FlatConfig::get_int(const std::string& key) const {
    double d = get_double(key);
    int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) {
        throw std::invalid_argument("config key " + key + " is not an integer: " + get(key));
    }
    return i;
}

std::vector<double> FlatConfig::get_list(const std::string& key) const {
    std::string v = get(key);
    for (char& c : v) {
        if (c == ',') c = ' ';
    }
    std::istringstream is(v);
    std::vector<double> out;
    double d = 0.0;
    while (is >> d) out.push_back(d);
    if (out.empty()) {
        throw std::invalid_argument("config key " + key + " holds no numbers: " + get(key));
    }
    return out;
}

std::string FlatConfig::serialize() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
    return os.str();
}

FlatConfig grid_config(const Grid& grid) {
    FlatConfig cfg;
    cfg.set_double("grid.L", grid.half_width());
    cfg.set("grid.M", std::to_string(grid.size()));
    cfg.set_double("grid.omega.lo", grid.omega().lo);
    cfg.set_double("grid.omega.hi", grid.omega().hi);
    cfg.set_double("grid.w1.lo", grid.w1().lo);
    cfg.set_double("grid.w1.hi", grid.w1().hi);
    cfg.set_double("grid.w2.lo", grid.w2().lo);
    cfg.set_double("grid.w2.hi", grid.w2().hi);
    return cfg;
}

GridPtr grid_from_config(const FlatConfig& cfg, const std::string& prefix) {
    return Grid::build(cfg.get_double(prefix + "L"), cfg.get_int(prefix + "M"),
                       Interval{cfg.get_double(prefix + "omega.lo"), cfg.get_double(prefix + "omega.hi")},
                       Interval{cfg.get_double(prefix + "w1.lo"), cfg.get_double(prefix + "w1.hi")},
                       Interval{cfg.get_double(prefix + "w2.lo"), cfg.get_double(prefix + "w2.hi")});
}

}  // namespace fracinv::io
