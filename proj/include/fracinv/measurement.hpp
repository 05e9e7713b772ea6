#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fracinv/frac_operator.hpp"
#include "fracinv/grid.hpp"

namespace fracinv {

/// Deterministic uniform double in [-1, 1) built from the raw engine
/// stream, so noise streams are reproducible bit for bit across platforms.
double uniform_pm1(std::uint64_t& state);

/// Splitmix-style stream; seeds the noise generator.
struct NoiseStream {
    std::uint64_t state;
    explicit NoiseStream(std::uint64_t seed) : state(seed) {}
    double next_pm1() { return uniform_pm1(state); }
};

/// Exterior Cauchy pair: the prescribed input sampled on w1 and the
/// discrete operator value sampled on w2.
struct CauchyPair {
    std::vector<double> dirichlet;  // f on the w1 nodes
    std::vector<double> neumann;    // (A u) on the w2 nodes
    bool passive = false;           // identically-zero input
    int input_id = -1;
};

/// Samples the pair for a solved state u with exterior data f. The field u
/// must carry f on the exterior nodes exactly.
CauchyPair take_cauchy_pair(const NonlocalStiffness& op, const ScalarField& u,
                            const ScalarField& exterior_data, int input_id = -1);

/// Smooth compactly supported bump on w1 with unit sup, used as the
/// canonical input profile.
std::function<double(double)> standard_bump(Interval w1);

/// Ladder of exterior inputs f_l = (l/N) * amplitude * g, l = 0..N (count =
/// N+1), with g the bump profile scaled to unit nodal sup. Nonpositive
/// ladders (-f_l) serve the sign-constrained two-measurement scenario.
std::vector<ScalarField> synthesize_exterior_family(const GridPtr& grid, int count,
                                                    double amplitude,
                                                    bool nonpositive = false);
std::vector<ScalarField> synthesize_exterior_family(
    const GridPtr& grid, int count, double amplitude,
    const std::function<double(double)>& profile, bool nonpositive = false);

/// Ordered Cauchy pairs with their generating inputs. Construction rejects
/// input families that are not pairwise separated on w1.
struct MeasurementSet {
    std::vector<CauchyPair> pairs;
    std::vector<ScalarField> inputs;
    double noise_level = 0.0;
    double separation = 0.0;  // smallest pairwise sup distance on w1

    static MeasurementSet collect(const NonlocalStiffness& op,
                                  const std::vector<ScalarField>& solutions,
                                  const std::vector<ScalarField>& inputs);
};

/// Perturbs every neumann sample by relative uniform noise of the given
/// level; the dirichlet side is the chosen input and stays untouched.
/// Deterministic under the seed.
MeasurementSet add_noise(const MeasurementSet& set, double level, std::uint64_t seed);

/// Relative uniform perturbation of a field on the masked nodes, used to
/// model noisy reconstruction inputs. Deterministic under the seed.
ScalarField perturb_field(const ScalarField& f, const RegionMask& region, double level,
                          std::uint64_t seed);

}  // namespace fracinv
