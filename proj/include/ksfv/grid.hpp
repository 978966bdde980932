#pragma once
// Structured cell-centered grids in 1/2/3 dimensions with an active-cell
// mask (full box, or staircase ball: a cell is active iff its center lies
// inside the ball), cell-averaged scalar fields, and the conservative
// no-flux difference operators the time steppers and diagnostics share.
//
// All face-based operators treat faces to inactive or out-of-lattice cells
// as zero-flux, so the discrete divergences sum to zero exactly and the
// five/seven-point Laplacian is self-adjoint.

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "ksfv/expr.hpp"

namespace ksfv {

struct RegionSpec {
    enum class Kind { box, ball };
    Kind kind = Kind::box;
    int dim = 1;
    std::array<double, 3> lo{0.0, 0.0, 0.0};      // box corners
    std::array<double, 3> hi{1.0, 1.0, 1.0};
    std::array<double, 3> center{0.0, 0.0, 0.0};  // ball
    double radius = 1.0;

    static RegionSpec box(int dim, std::array<double, 3> lo, std::array<double, 3> hi);
    static RegionSpec ball(int dim, std::array<double, 3> center, double radius);
    void validate() const;  // throws std::invalid_argument on degenerate regions

    bool operator==(const RegionSpec&) const = default;
};

class Grid {
public:
    int dim() const { return dim_; }
    const std::array<int, 3>& cells() const { return cells_; }
    const std::array<double, 3>& spacing() const { return spacing_; }
    const std::array<double, 3>& origin() const { return origin_; }
    const RegionSpec& region() const { return region_; }

    double cell_volume() const { return cell_volume_; }
    double domain_volume() const { return cell_volume_ * active_count(); }

    int active_count() const { return static_cast<int>(cell_of_active_.size()); }
    std::int64_t lattice_count() const { return lattice_count_; }

    // -1 if the lattice cell is inactive.
    int active_index(int ix, int iy, int iz) const {
        return active_of_cell_[lattice_index(ix, iy, iz)];
    }
    int active_index_of_lattice(std::int64_t lattice) const {
        return active_of_cell_[static_cast<std::size_t>(lattice)];
    }
    std::int64_t lattice_index(int ix, int iy, int iz) const {
        return (static_cast<std::int64_t>(iz) * cells_[1] + iy) * cells_[0] + ix;
    }

    std::array<int, 3> lattice_coords(int active) const;
    std::array<double, 3> cell_center(int active) const;

    // Active-index of the face neighbors (-x,+x,-y,+y,-z,+z); -1 when the
    // neighbor is inactive or outside the lattice.
    const std::array<int, 6>& neighbors(int active) const {
        return neighbors_[static_cast<std::size_t>(active)];
    }

    // 1/h^2 for the axis of neighbor slot k (k/2 is the axis).
    double inv_h2(int slot) const { return inv_h2_[static_cast<std::size_t>(slot / 2)]; }

private:
    friend std::shared_ptr<const Grid> build_grid(const RegionSpec&, const std::vector<int>&);

    int dim_ = 1;
    std::array<int, 3> cells_{1, 1, 1};
    std::array<double, 3> spacing_{1.0, 1.0, 1.0};
    std::array<double, 3> origin_{0.0, 0.0, 0.0};
    std::array<double, 3> inv_h2_{1.0, 1.0, 1.0};
    double cell_volume_ = 1.0;
    std::int64_t lattice_count_ = 1;
    RegionSpec region_;
    std::vector<int> active_of_cell_;            // lattice -> active or -1
    std::vector<std::int64_t> cell_of_active_;   // active -> lattice
    std::vector<std::array<int, 6>> neighbors_;  // active -> face neighbors
};

using GridPtr = std::shared_ptr<const Grid>;

// resolution holds one entry per axis (or a single entry reused for all).
// Requires >= 4 cells per axis; throws std::invalid_argument otherwise.
// The active region is checked to be nonempty and face-connected.
GridPtr build_grid(const RegionSpec& region, const std::vector<int>& resolution);

class Field {
public:
    Field() = default;
    explicit Field(GridPtr grid, double fill = 0.0)
        : grid_(std::move(grid)), v_(static_cast<std::size_t>(grid_->active_count()), fill) {}

    const GridPtr& grid() const { return grid_; }
    int size() const { return static_cast<int>(v_.size()); }
    double operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return v_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    // Throws std::runtime_error if any value is NaN or infinite.
    void ensure_finite(const char* what) const;

private:
    GridPtr grid_;
    std::vector<double> v_;
};

// sum_i f_i h^d over active cells.
double integrate(const Field& f);

// (sum |f|^p h^d)^(1/p); p = infinity gives the max over active cells.
double lp_norm(const Field& f, double p);

// Discrete ||grad f||_L2^2: sum over interior faces of ((f_R-f_L)/h)^2 h^d.
double gradient_sq_integral(const Field& f);

// Conservative no-flux Laplacian: (div F)_i = sum_faces (f_nb - f_i)/h^2.
Field diffusive_flux_divergence(const Field& f);

// Discrete div(rho grad c) with the face density taken from the upwind
// (donor) cell with respect to the face gradient of c. Conservative.
Field advective_divergence(const Field& rho, const Field& c);

// Cell-center evaluation of an expression; throws std::domain_error with
// the offending active-cell index on evaluation domain errors or
// non-finite results.
Field evaluate_on_grid(const Expression& expr, const GridPtr& grid, double t = 0.0);

// Convenience: parse + evaluate.
Field evaluate_expression(const std::string& expr, const GridPtr& grid, double t = 0.0);

}  // namespace ksfv
