#include "dpm/staggered.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpm {

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

StaggeredField::StaggeredField(const Lattice& lat) : lattice(lat) {
    for (int a = 0; a < lat.dim(); ++a) velocity[a].assign(lat.num_faces(a), 0.0);
    pressure.assign(lat.num_cells(), 0.0);
}

Vec3 StaggeredField::cell_velocity(std::size_t cell) const {
    Vec3 v{};
    const Coord c = lattice.cell_coords(cell);
    for (int a = 0; a < lattice.dim(); ++a) {
        Coord hi = c;
        hi[a] += 1;
        const std::ptrdiff_t lo_face = lattice.face_at(a, c);
        const std::ptrdiff_t hi_face = lattice.face_at(a, hi);
        const double lo_v = lo_face >= 0 ? velocity[a][static_cast<std::size_t>(lo_face)] : 0.0;
        const double hi_v = hi_face >= 0 ? velocity[a][static_cast<std::size_t>(hi_face)] : 0.0;
        v[a] = 0.5 * (lo_v + hi_v);
    }
    return v;
}

double StaggeredField::max_abs_velocity() const {
    double m = 0.0;
    for (int a = 0; a < lattice.dim(); ++a) {
        for (double v : velocity[a]) m = std::max(m, std::abs(v));
    }
    return m;
}

StaggeredSpace::StaggeredSpace(const IndicatorField& mask) : mask_(mask) { build(); }

void StaggeredSpace::build() {
    const Lattice& lat = lattice();
    const int d = lat.dim();
    const double inv_h = 1.0 / lat.h();
    const double inv_h2 = inv_h * inv_h;

    auto cell_fluid = [&](const Coord& c) { return mask_.fluid_at(c); };

    for (int a = 0; a < d; ++a) {
        face_id_[a].assign(lat.num_faces(a), -1);
        for (std::size_t f = 0; f < lat.num_faces(a); ++f) {
            const std::ptrdiff_t lo = lat.face_low_cell(a, f);
            const std::ptrdiff_t hi = lat.face_high_cell(a, f);
            if (lo >= 0 && hi >= 0 && mask_.fluid(static_cast<std::size_t>(lo)) &&
                mask_.fluid(static_cast<std::size_t>(hi))) {
                face_id_[a][f] = static_cast<std::ptrdiff_t>(faces_.size());
                faces_.push_back({a, f});
            }
        }
    }
    cell_id_.assign(lat.num_cells(), -1);
    for (std::size_t c = 0; c < lat.num_cells(); ++c) {
        if (mask_.fluid(c)) {
            cell_id_[c] = static_cast<std::ptrdiff_t>(cells_.size());
            cells_.push_back(c);
        }
    }

    // Vector Laplacian.
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(faces_.size() * (2 * d + 1));
    DisjointSets face_sets(faces_.size());
    std::vector<std::uint8_t> touches_wall(faces_.size(), 0);
    for (std::size_t row = 0; row < faces_.size(); ++row) {
        const auto [a, f] = faces_[row];
        const Coord x = lat.face_coords(a, f);
        double diag = 0.0;
        for (int b = 0; b < d; ++b) {
            for (int s : {-1, 1}) {
                Coord y = x;
                y[b] += s;
                Coord y_lo = y;
                y_lo[a] -= 1;
                const int solid = (cell_fluid(y_lo) ? 0 : 1) + (cell_fluid(y) ? 0 : 1);
                if (solid == 0) {
                    const auto col = static_cast<std::size_t>(face_id_[a][lat.face_at(a, y)]);
                    triplets.emplace_back(static_cast<int>(row), static_cast<int>(col), inv_h2);
                    diag -= inv_h2;
                    face_sets.unite(row, col);
                } else if (solid == 1) {
                    diag -= inv_h2;
                    touches_wall[row] = 1;
                } else {
                    diag -= 2.0 * inv_h2;
                    touches_wall[row] = 1;
                }
            }
        }
        triplets.emplace_back(static_cast<int>(row), static_cast<int>(row), diag);
    }
    laplacian_.resize(static_cast<Eigen::Index>(faces_.size()),
                      static_cast<Eigen::Index>(faces_.size()));
    laplacian_.setFromTriplets(triplets.begin(), triplets.end());

    std::vector<std::uint8_t> root_has_wall(faces_.size(), 0);
    for (std::size_t i = 0; i < faces_.size(); ++i) {
        if (touches_wall[i]) root_has_wall[face_sets.find(i)] = 1;
    }
    definite_ = true;
    for (std::size_t i = 0; i < faces_.size(); ++i) {
        if (!root_has_wall[face_sets.find(i)]) definite_ = false;
    }

    // Divergence.
    triplets.clear();
    DisjointSets cell_sets(cells_.size());
    for (std::size_t row = 0; row < cells_.size(); ++row) {
        const Coord x = lat.cell_coords(cells_[row]);
        for (int a = 0; a < d; ++a) {
            Coord hi = x;
            hi[a] += 1;
            const std::ptrdiff_t lo_face = lat.face_at(a, x);
            const std::ptrdiff_t hi_face = lat.face_at(a, hi);
            if (lo_face >= 0 && face_id_[a][lo_face] >= 0) {
                triplets.emplace_back(static_cast<int>(row), static_cast<int>(face_id_[a][lo_face]),
                                      -inv_h);
                const std::ptrdiff_t other = lat.face_low_cell(a, static_cast<std::size_t>(lo_face));
                cell_sets.unite(row, static_cast<std::size_t>(cell_id_[other]));
            }
            if (hi_face >= 0 && face_id_[a][hi_face] >= 0) {
                triplets.emplace_back(static_cast<int>(row), static_cast<int>(face_id_[a][hi_face]),
                                      inv_h);
            }
        }
    }
    divergence_.resize(static_cast<Eigen::Index>(cells_.size()),
                       static_cast<Eigen::Index>(faces_.size()));
    divergence_.setFromTriplets(triplets.begin(), triplets.end());

    components_.assign(cells_.size(), -1);
    std::vector<int> root_label(cells_.size(), -1);
    num_components_ = 0;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const std::size_t root = cell_sets.find(i);
        if (root_label[root] < 0) root_label[root] = num_components_++;
        components_[i] = root_label[root];
    }
}

Vector StaggeredSpace::gather_velocity(const StaggeredField& field) const {
    Vector v(static_cast<Eigen::Index>(faces_.size()));
    for (std::size_t i = 0; i < faces_.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = field.velocity[faces_[i].axis][faces_[i].face];
    }
    return v;
}

Vector StaggeredSpace::gather_pressure(const StaggeredField& field) const {
    Vector p(static_cast<Eigen::Index>(cells_.size()));
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        p[static_cast<Eigen::Index>(i)] = field.pressure[cells_[i]];
    }
    return p;
}

void StaggeredSpace::scatter_velocity(const Vector& v, StaggeredField& field) const {
    for (int a = 0; a < dim(); ++a) std::fill(field.velocity[a].begin(), field.velocity[a].end(), 0.0);
    for (std::size_t i = 0; i < faces_.size(); ++i) {
        field.velocity[faces_[i].axis][faces_[i].face] = v[static_cast<Eigen::Index>(i)];
    }
}

void StaggeredSpace::scatter_pressure(const Vector& p, StaggeredField& field) const {
    std::fill(field.pressure.begin(), field.pressure.end(), 0.0);
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        field.pressure[cells_[i]] = p[static_cast<Eigen::Index>(i)];
    }
}

Vector StaggeredSpace::unit_drive(int axis) const {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(faces_.size()));
    for (std::size_t i = 0; i < faces_.size(); ++i) {
        if (faces_[i].axis == axis) e[static_cast<Eigen::Index>(i)] = 1.0;
    }
    return e;
}

void StaggeredSpace::project_mean_zero(Vector& p) const {
    std::vector<double> sum(num_components_, 0.0);
    std::vector<long> count(num_components_, 0);
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        sum[components_[i]] += p[static_cast<Eigen::Index>(i)];
        count[components_[i]] += 1;
    }
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        p[static_cast<Eigen::Index>(i)] -= sum[components_[i]] / static_cast<double>(count[components_[i]]);
    }
}

}  // namespace dpm
