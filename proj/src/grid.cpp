#include "fracinv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fracinv {

namespace {

void check_inside(const Interval& iv, double L, const char* name) {
    if (!(iv.lo < iv.hi)) {
        throw std::invalid_argument(std::string(name) + " is empty or reversed");
    }
    if (!(-L < iv.lo && iv.hi < L)) {
        std::ostringstream os;
        os << name << " = (" << iv.lo << ", " << iv.hi << ") must lie strictly inside (-" << L
           << ", " << L << ")";
        throw std::invalid_argument(os.str());
    }
}

}  // namespace

GridPtr Grid::build(double half_width, int node_count, Interval omega, Interval w1, Interval w2) {
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
        throw std::invalid_argument("half_width must be positive and finite");
    }
    if (node_count < 9 || node_count % 2 == 0) {
        throw std::invalid_argument("node_count must be an odd integer >= 9");
    }
    check_inside(omega, half_width, "omega");
    check_inside(w1, half_width, "w1");
    check_inside(w2, half_width, "w2");
    if (!omega.closure_disjoint(w1)) {
        throw std::invalid_argument("w1 overlaps the closure of omega");
    }
    if (!omega.closure_disjoint(w2)) {
        throw std::invalid_argument("w2 overlaps the closure of omega");
    }
    if (!w1.closure_disjoint(w2)) {
        throw std::invalid_argument("w1 and w2 overlap");
    }

    auto grid = std::shared_ptr<Grid>(new Grid());
    grid->half_width_ = half_width;
    grid->omega_ = omega;
    grid->w1_ = w1;
    grid->w2_ = w2;
    grid->spacing_ = 2.0 * half_width / static_cast<double>(node_count - 1);
    grid->nodes_.resize(static_cast<std::size_t>(node_count));
    grid->tags_.resize(static_cast<std::size_t>(node_count));
    for (int i = 0; i < node_count; ++i) {
        // Endpoints are pinned exactly to +-L.
        double x = (i == node_count - 1) ? half_width
                                         : -half_width + grid->spacing_ * static_cast<double>(i);
        grid->nodes_[static_cast<std::size_t>(i)] = x;
        Region tag = Region::exterior_other;
        if (omega.contains_strictly(x)) {
            tag = Region::interior;
        } else if (w1.contains_strictly(x)) {
            tag = Region::exterior_w1;
        } else if (w2.contains_strictly(x)) {
            tag = Region::exterior_w2;
        }
        grid->tags_[static_cast<std::size_t>(i)] = tag;
        switch (tag) {
            case Region::interior: grid->interior_.push_back(i); break;
            case Region::exterior_w1: grid->w1_nodes_.push_back(i); break;
            case Region::exterior_w2: grid->w2_nodes_.push_back(i); break;
            case Region::exterior_other: break;
        }
        if (tag != Region::interior) grid->exterior_.push_back(i);
    }

    auto require_nodes = [&](const std::vector<int>& idx, const char* name) {
        if (static_cast<int>(idx.size()) < 3) {
            std::ostringstream os;
            os << name << " holds " << idx.size()
               << " node(s); need at least 3 (grid too coarse for this region)";
            throw std::invalid_argument(os.str());
        }
    };
    require_nodes(grid->interior_, "omega");
    require_nodes(grid->w1_nodes_, "w1");
    require_nodes(grid->w2_nodes_, "w2");
    return grid;
}

RegionMask RegionMask::of(const GridPtr& grid, Region region) {
    std::vector<int> idx;
    for (int i = 0; i < grid->size(); ++i) {
        if (grid->tag(i) == region) idx.push_back(i);
    }
    return of_indices(grid, std::move(idx));
}

RegionMask RegionMask::of_indices(const GridPtr& grid, std::vector<int> indices) {
    std::sort(indices.begin(), indices.end());
    RegionMask mask;
    mask.grid_ = grid;
    mask.member_.assign(static_cast<std::size_t>(grid->size()), 0);
    for (int i : indices) {
        if (i < 0 || i >= grid->size()) {
            throw std::invalid_argument("mask index out of range");
        }
        mask.member_[static_cast<std::size_t>(i)] = 1;
    }
    mask.indices_ = std::move(indices);
    return mask;
}

ScalarField::ScalarField(GridPtr grid)
    : grid_(std::move(grid)), values_(static_cast<std::size_t>(grid_->size()), 0.0) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)) {
    if (static_cast<int>(values.size()) != grid_->size()) {
        throw std::invalid_argument("field length does not match grid size");
    }
    values_ = std::move(values);
}

bool same_grid(const ScalarField& a, const ScalarField& b) { return a.grid() == b.grid(); }

void require_same_grid(const ScalarField& a, const ScalarField& b, const char* where) {
    if (!same_grid(a, b)) {
        throw std::invalid_argument(std::string(where) + ": fields live on different grids");
    }
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
    require_same_grid(*this, other, "operator+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
    require_same_grid(*this, other, "operator-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

ScalarField& ScalarField::operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
}

ScalarField ScalarField::restricted(const RegionMask& mask) const {
    if (mask.grid() != grid_) {
        throw std::invalid_argument("restricted: mask grid mismatch");
    }
    ScalarField out(grid_);
    for (int i : mask.indices()) out[i] = (*this)[i];
    return out;
}

double ScalarField::sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double ScalarField::sup_norm(const RegionMask& mask) const {
    double m = 0.0;
    for (int i : mask.indices()) m = std::max(m, std::abs((*this)[i]));
    return m;
}

ScalarField field_from_function(const GridPtr& grid,
                                const std::function<double(double)>& sampler,
                                const RegionMask& region) {
    if (region.grid() != grid) {
        throw std::invalid_argument("field_from_function: mask grid mismatch");
    }
    ScalarField f(grid);
    for (int i : region.indices()) {
        double v = sampler(grid->node(i));
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "sampler returned a non-finite value at node " << i << " (x = " << grid->node(i)
               << ")";
            throw std::invalid_argument(os.str());
        }
        f[i] = v;
    }
    return f;
}

FieldNorms field_norms(const ScalarField& f, const RegionMask& region) {
    if (region.grid() != f.grid()) {
        throw std::invalid_argument("field_norms: mask grid mismatch");
    }
    if (region.count() == 0) {
        throw std::invalid_argument("field_norms: empty region");
    }
    FieldNorms n;
    double sq = 0.0;
    for (int i : region.indices()) {
        double v = f[i];
        n.sup = std::max(n.sup, std::abs(v));
        sq += v * v;
    }
    n.l2 = std::sqrt(f.grid()->spacing() * sq);
    return n;
}

}  // namespace fracinv
