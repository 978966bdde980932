#include "ksfv/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ksfv {

RegionSpec RegionSpec::box(int dim, std::array<double, 3> lo, std::array<double, 3> hi) {
    RegionSpec r;
    r.kind = Kind::box;
    r.dim = dim;
    r.lo = lo;
    r.hi = hi;
    r.validate();
    return r;
}

RegionSpec RegionSpec::ball(int dim, std::array<double, 3> center, double radius) {
    RegionSpec r;
    r.kind = Kind::ball;
    r.dim = dim;
    r.center = center;
    r.radius = radius;
    r.validate();
    return r;
}

void RegionSpec::validate() const {
    if (dim < 1 || dim > 3) throw std::invalid_argument("RegionSpec: dim must be 1, 2 or 3");
    if (kind == Kind::box) {
        for (int a = 0; a < dim; ++a)
            if (!(hi[a] > lo[a]))
                throw std::invalid_argument("RegionSpec: box extents must be positive");
    } else {
        if (!(radius > 0.0)) throw std::invalid_argument("RegionSpec: ball radius must be > 0");
    }
}

GridPtr build_grid(const RegionSpec& region, const std::vector<int>& resolution) {
    region.validate();
    if (resolution.empty()) throw std::invalid_argument("build_grid: empty resolution");

    auto grid = std::make_shared<Grid>();
    Grid& g = *grid;
    g.dim_ = region.dim;
    g.region_ = region;

    std::array<double, 3> lo{0, 0, 0}, hi{1, 1, 1};
    for (int a = 0; a < region.dim; ++a) {
        if (region.kind == RegionSpec::Kind::box) {
            lo[a] = region.lo[a];
            hi[a] = region.hi[a];
        } else {
            lo[a] = region.center[a] - region.radius;
            hi[a] = region.center[a] + region.radius;
        }
    }

    g.cell_volume_ = 1.0;
    g.lattice_count_ = 1;
    for (int a = 0; a < 3; ++a) {
        if (a < region.dim) {
            int n = resolution[resolution.size() == 1 ? 0 : static_cast<std::size_t>(a)];
            if (n < 4) throw std::invalid_argument("build_grid: need >= 4 cells per axis");
            g.cells_[a] = n;
            g.origin_[a] = lo[a];
            g.spacing_[a] = (hi[a] - lo[a]) / n;
            g.inv_h2_[a] = 1.0 / (g.spacing_[a] * g.spacing_[a]);
            g.cell_volume_ *= g.spacing_[a];
        } else {
            g.cells_[a] = 1;
            g.spacing_[a] = 1.0;
            g.origin_[a] = 0.0;
            g.inv_h2_[a] = 1.0;
        }
        g.lattice_count_ *= g.cells_[a];
    }

    g.active_of_cell_.assign(static_cast<std::size_t>(g.lattice_count_), -1);

    auto center_of = [&](int ix, int iy, int iz) {
        std::array<double, 3> c{0, 0, 0};
        const int idx[3] = {ix, iy, iz};
        for (int a = 0; a < 3; ++a) c[a] = g.origin_[a] + (idx[a] + 0.5) * g.spacing_[a];
        return c;
    };

    for (int iz = 0; iz < g.cells_[2]; ++iz)
        for (int iy = 0; iy < g.cells_[1]; ++iy)
            for (int ix = 0; ix < g.cells_[0]; ++ix) {
                bool active = true;
                if (region.kind == RegionSpec::Kind::ball) {
                    auto c = center_of(ix, iy, iz);
                    double r2 = 0.0;
                    for (int a = 0; a < region.dim; ++a) {
                        double d = c[a] - region.center[a];
                        r2 += d * d;
                    }
                    active = r2 < region.radius * region.radius;
                }
                if (active) {
                    std::int64_t li = g.lattice_index(ix, iy, iz);
                    g.active_of_cell_[static_cast<std::size_t>(li)] =
                        static_cast<int>(g.cell_of_active_.size());
                    g.cell_of_active_.push_back(li);
                }
            }

    if (g.cell_of_active_.empty()) throw std::invalid_argument("build_grid: no active cells");

    // Face-neighbor table.
    g.neighbors_.resize(g.cell_of_active_.size());
    for (int i = 0; i < g.active_count(); ++i) {
        auto [ix, iy, iz] = g.lattice_coords(i);
        auto& nb = g.neighbors_[static_cast<std::size_t>(i)];
        nb.fill(-1);
        const int coord[3] = {ix, iy, iz};
        for (int a = 0; a < region.dim; ++a) {
            for (int s = 0; s < 2; ++s) {
                int q[3] = {coord[0], coord[1], coord[2]};
                q[a] += s == 0 ? -1 : 1;
                if (q[a] < 0 || q[a] >= g.cells_[a]) continue;
                nb[static_cast<std::size_t>(2 * a + s)] = g.active_index(q[0], q[1], q[2]);
            }
        }
    }

    // Face-connectivity of the active region (flood fill from cell 0).
    std::vector<char> seen(g.cell_of_active_.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        for (int j : g.neighbors(i))
            if (j >= 0 && !seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = 1;
                ++reached;
                stack.push_back(j);
            }
    }
    if (reached != g.cell_of_active_.size())
        throw std::invalid_argument("build_grid: active region is not face-connected");

    return grid;
}

std::array<int, 3> Grid::lattice_coords(int active) const {
    std::int64_t li = cell_of_active_[static_cast<std::size_t>(active)];
    int ix = static_cast<int>(li % cells_[0]);
    std::int64_t rest = li / cells_[0];
    int iy = static_cast<int>(rest % cells_[1]);
    int iz = static_cast<int>(rest / cells_[1]);
    return {ix, iy, iz};
}

std::array<double, 3> Grid::cell_center(int active) const {
    auto [ix, iy, iz] = lattice_coords(active);
    const int idx[3] = {ix, iy, iz};
    std::array<double, 3> c{0, 0, 0};
    for (int a = 0; a < 3; ++a) c[a] = origin_[a] + (idx[a] + 0.5) * spacing_[a];
    return c;
}

void Field::ensure_finite(const char* what) const {
    for (std::size_t i = 0; i < v_.size(); ++i)
        if (!std::isfinite(v_[i]))
            throw std::runtime_error(std::string(what) + ": non-finite value at active cell " +
                                     std::to_string(i));
}

double integrate(const Field& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.grid()->cell_volume();
}

double lp_norm(const Field& f, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.values()) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 or infinity");
    double s = 0.0;
    for (double v : f.values()) s += std::pow(std::abs(v), p);
    return std::pow(s * f.grid()->cell_volume(), 1.0 / p);
}

double gradient_sq_integral(const Field& f) {
    const Grid& g = *f.grid();
    const double vol = g.cell_volume();
    double s = 0.0;
    for (int i = 0; i < g.active_count(); ++i) {
        const auto& nb = g.neighbors(i);
        for (int a = 0; a < g.dim(); ++a) {
            int j = nb[static_cast<std::size_t>(2 * a + 1)];  // +axis face only: each face once
            if (j < 0) continue;
            double d = f[j] - f[i];
            s += d * d * g.inv_h2(2 * a);
        }
    }
    return s * vol;
}

Field diffusive_flux_divergence(const Field& f) {
    const Grid& g = *f.grid();
    Field out(f.grid());
    for (int i = 0; i < g.active_count(); ++i) {
        const auto& nb = g.neighbors(i);
        double acc = 0.0;
        for (int k = 0; k < 2 * g.dim(); ++k) {
            int j = nb[static_cast<std::size_t>(k)];
            if (j < 0) continue;
            acc += (f[j] - f[i]) * g.inv_h2(k);
        }
        out[i] = acc;
    }
    return out;
}

Field advective_divergence(const Field& rho, const Field& c) {
    if (rho.grid() != c.grid())
        throw std::invalid_argument("advective_divergence: fields on different grids");
    const Grid& g = *rho.grid();
    Field out(rho.grid());
    for (int i = 0; i < g.active_count(); ++i) {
        const auto& nb = g.neighbors(i);
        double acc = 0.0;
        for (int k = 0; k < 2 * g.dim(); ++k) {
            int j = nb[static_cast<std::size_t>(k)];
            if (j < 0) continue;
            double dc = c[j] - c[i];
            // donor cell: the one the drift (toward higher c) flows out of
            double face_rho = dc > 0.0 ? rho[i] : rho[j];
            acc += face_rho * dc * g.inv_h2(k);
        }
        out[i] = acc;
    }
    return out;
}

Field evaluate_on_grid(const Expression& expr, const GridPtr& grid, double t) {
    Field out(grid);
    for (int i = 0; i < grid->active_count(); ++i) {
        auto c = grid->cell_center(i);
        double v;
        try {
            v = expr.eval(c[0], c[1], c[2], t);
        } catch (const std::domain_error& e) {
            throw std::domain_error(std::string(e.what()) + " at active cell " +
                                    std::to_string(i));
        }
        if (!std::isfinite(v))
            throw std::domain_error("expression evaluated to a non-finite value at active cell " +
                                    std::to_string(i));
        out[i] = v;
    }
    return out;
}

Field evaluate_expression(const std::string& expr, const GridPtr& grid, double t) {
    return evaluate_on_grid(Expression::parse(expr), grid, t);
}

}  // namespace ksfv
