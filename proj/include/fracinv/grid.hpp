#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fracinv {

/// Node classification on the truncated lattice. Every node carries exactly
/// one tag.
enum class Region : std::uint8_t {
    interior,        // strictly inside omega
    exterior_w1,     // measurement window carrying the Dirichlet input
    exterior_w2,     // measurement window where the operator is sampled
    exterior_other,  // remaining exterior nodes, where fields vanish
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    bool contains_strictly(double x) const { return lo < x && x < hi; }
    bool closure_disjoint(const Interval& other) const {
        return hi < other.lo || other.hi < lo;
    }
};

class Grid;
using GridPtr = std::shared_ptr<const Grid>;

/// Uniform lattice on [-L, L] with node x_i = -L + i*h, h = 2L/(M-1),
/// partitioned into interior (omega) and exterior regions. Immutable after
/// construction.
class Grid {
public:
    /// Builds the grid and tags every node. M must be odd and >= 9, the
    /// three intervals pairwise closure-disjoint and strictly inside
    /// (-L, L), and each region must receive at least 3 nodes.
    static GridPtr build(double half_width, int node_count, Interval omega,
                         Interval w1, Interval w2);

    double half_width() const { return half_width_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    double spacing() const { return spacing_; }
    double node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    std::span<const double> nodes() const { return nodes_; }
    Region tag(int i) const { return tags_[static_cast<std::size_t>(i)]; }

    Interval omega() const { return omega_; }
    Interval w1() const { return w1_; }
    Interval w2() const { return w2_; }

    const std::vector<int>& interior_nodes() const { return interior_; }
    const std::vector<int>& w1_nodes() const { return w1_nodes_; }
    const std::vector<int>& w2_nodes() const { return w2_nodes_; }
    /// All nodes not tagged interior, in index order.
    const std::vector<int>& exterior_nodes() const { return exterior_; }

private:
    Grid() = default;

    double half_width_ = 0.0;
    double spacing_ = 0.0;
    Interval omega_, w1_, w2_;
    std::vector<double> nodes_;
    std::vector<Region> tags_;
    std::vector<int> interior_, w1_nodes_, w2_nodes_, exterior_;
};

/// Subset of nodes of one grid, kept as a sorted index list.
class RegionMask {
public:
    static RegionMask of(const GridPtr& grid, Region region);
    static RegionMask of_indices(const GridPtr& grid, std::vector<int> indices);

    const GridPtr& grid() const { return grid_; }
    int count() const { return static_cast<int>(indices_.size()); }
    const std::vector<int>& indices() const { return indices_; }
    bool contains(int i) const {
        return i >= 0 && i < static_cast<int>(member_.size()) && member_[static_cast<std::size_t>(i)] != 0;
    }

private:
    GridPtr grid_;
    std::vector<int> indices_;
    std::vector<std::uint8_t> member_;
};

/// One real value per node of a fixed grid. Value semantics; algebraic
/// operations require identical grids.
class ScalarField {
public:
    explicit ScalarField(GridPtr grid);
    ScalarField(GridPtr grid, std::vector<double> values);

    const GridPtr& grid() const { return grid_; }
    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& raw() { return values_; }
    const std::vector<double>& raw() const { return values_; }

    ScalarField& operator+=(const ScalarField& other);
    ScalarField& operator-=(const ScalarField& other);
    ScalarField& operator*=(double c);
    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double c, ScalarField f) { return f *= c; }

    /// Zeroes every node outside the mask.
    ScalarField restricted(const RegionMask& mask) const;

    double sup_norm() const;
    /// Largest |value| over the masked nodes.
    double sup_norm(const RegionMask& mask) const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// True when both fields live on the same grid object.
bool same_grid(const ScalarField& a, const ScalarField& b);
void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where);

/// Samples the function on the masked nodes, zero elsewhere. Non-finite
/// samples are rejected with the offending node in the message.
ScalarField field_from_function(const GridPtr& grid,
                                const std::function<double(double)>& sampler,
                                const RegionMask& region);

struct FieldNorms {
    double sup = 0.0;
    double l2 = 0.0;  // sqrt(h * sum f^2) over the region
};

/// Sup and h-weighted l2 norms over a nonempty region.
FieldNorms field_norms(const ScalarField& f, const RegionMask& region);

}  // namespace fracinv
