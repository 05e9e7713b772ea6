#include "fracinv/measurement.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fracinv {

double uniform_pm1(std::uint64_t& state) {
    // splitmix64 step; top 53 bits give the mantissa.
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
}

CauchyPair take_cauchy_pair(const NonlocalStiffness& op, const ScalarField& u,
                            const ScalarField& exterior_data, int input_id) {
    if (u.grid() != op.grid() || exterior_data.grid() != op.grid()) {
        throw std::invalid_argument("take_cauchy_pair: grid mismatch");
    }
    for (int j : op.grid()->exterior_nodes()) {
        if (u[j] != exterior_data[j]) {
            throw std::invalid_argument(
                "take_cauchy_pair: field does not carry the exterior data exactly");
        }
    }
    ScalarField au = op.apply(u);
    CauchyPair pair;
    pair.input_id = input_id;
    for (int j : op.grid()->w1_nodes()) pair.dirichlet.push_back(exterior_data[j]);
    for (int j : op.grid()->w2_nodes()) pair.neumann.push_back(au[j]);
    double fsup = 0.0;
    for (int j : op.grid()->exterior_nodes()) fsup = std::max(fsup, std::abs(exterior_data[j]));
    pair.passive = (fsup == 0.0);
    return pair;
}

std::function<double(double)> standard_bump(Interval w1) {
    double mid = 0.5 * (w1.lo + w1.hi);
    double rad = 0.5 * (w1.hi - w1.lo);
    return [mid, rad](double x) {
        double t = (x - mid) / rad;
        if (!(std::abs(t) < 1.0)) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - t * t));
    };
}

std::vector<ScalarField> synthesize_exterior_family(const GridPtr& grid, int count,
                                                    double amplitude, bool nonpositive) {
    return synthesize_exterior_family(grid, count, amplitude, standard_bump(grid->w1()),
                                      nonpositive);
}

std::vector<ScalarField> synthesize_exterior_family(
    const GridPtr& grid, int count, double amplitude,
    const std::function<double(double)>& profile, bool nonpositive) {
    if (count < 1) {
        throw std::invalid_argument("synthesize_exterior_family: count must be >= 1");
    }
    if (count > 1 && amplitude == 0.0) {
        throw std::invalid_argument(
            "synthesize_exterior_family: zero amplitude cannot produce distinct inputs");
    }
    RegionMask w1 = RegionMask::of(grid, Region::exterior_w1);
    ScalarField g = field_from_function(grid, profile, w1);
    double sup = g.sup_norm();
    if (!(sup > 0.0)) {
        throw std::invalid_argument("synthesize_exterior_family: profile vanishes on w1 nodes");
    }
    g *= 1.0 / sup;  // unit nodal sup
    const double sign = nonpositive ? -1.0 : 1.0;
    std::vector<ScalarField> family;
    family.reserve(static_cast<std::size_t>(count));
    const int N = count - 1;
    for (int l = 0; l < count; ++l) {
        double scale = (N == 0) ? 0.0 : sign * amplitude * static_cast<double>(l) /
                                             static_cast<double>(N);
        family.push_back(scale * g);
    }
    return family;
}

MeasurementSet MeasurementSet::collect(const NonlocalStiffness& op,
                                       const std::vector<ScalarField>& solutions,
                                       const std::vector<ScalarField>& inputs) {
    if (solutions.size() != inputs.size() || solutions.empty()) {
        throw std::invalid_argument("MeasurementSet: need matching nonempty solution/input lists");
    }
    MeasurementSet set;
    const auto& w1 = op.grid()->w1_nodes();
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < inputs.size(); ++a) {
        for (std::size_t b = a + 1; b < inputs.size(); ++b) {
            double d = 0.0;
            for (int j : w1) d = std::max(d, std::abs(inputs[a][j] - inputs[b][j]));
            sep = std::min(sep, d);
        }
    }
    if (inputs.size() > 1 && !(sep > 0.0)) {
        throw std::invalid_argument("MeasurementSet: inputs are not pairwise distinct on w1");
    }
    set.separation = inputs.size() > 1 ? sep : 0.0;
    for (std::size_t l = 0; l < inputs.size(); ++l) {
        set.pairs.push_back(take_cauchy_pair(op, solutions[l], inputs[l], static_cast<int>(l)));
        set.inputs.push_back(inputs[l]);
    }
    return set;
}

MeasurementSet add_noise(const MeasurementSet& set, double level, std::uint64_t seed) {
    if (level < 0.0) {
        throw std::invalid_argument("add_noise: level must be >= 0");
    }
    MeasurementSet out = set;
    out.noise_level = level;
    if (level == 0.0) return out;
    NoiseStream rng(seed);
    for (auto& pair : out.pairs) {
        for (double& v : pair.neumann) v *= 1.0 + level * rng.next_pm1();
    }
    return out;
}

ScalarField perturb_field(const ScalarField& f, const RegionMask& region, double level,
                          std::uint64_t seed) {
    if (level < 0.0) {
        throw std::invalid_argument("perturb_field: level must be >= 0");
    }
    ScalarField out = f;
    if (level == 0.0) return out;
    NoiseStream rng(seed);
    for (int i : region.indices()) out[i] = f[i] * (1.0 + level * rng.next_pm1());
    return out;
}

}  // namespace fracinv
