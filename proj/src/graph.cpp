#include "arw/graph.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <numeric>

namespace arw {

namespace {

void validate(const GraphSpec& spec) {
    if (spec.radius < 1) throw GraphBuildError("radius must be >= 1");
    switch (spec.family) {
        case GraphFamily::Line:
            break;
        case GraphFamily::Lattice:
            if (spec.dimension < 1) throw GraphBuildError("lattice dimension must be >= 1");
            break;
        case GraphFamily::RegularTree:
            if (spec.degree < 3) throw GraphBuildError("regular tree degree must be >= 3");
            break;
    }
    if (spec.jump_kind == JumpKind::TotallyAsymmetric && spec.family != GraphFamily::Line)
        throw GraphBuildError("totally asymmetric jumps are only defined on the line");
}

int64_t tree_ball_size(int d, int L) {
    // 1 + sum_{n=1}^{L} d (d-1)^{n-1}
    int64_t total = 1, sphere = d;
    for (int n = 1; n <= L; ++n) {
        total += sphere;
        if (total > (int64_t{1} << 40)) return total;  // already absurd, stop growing
        sphere *= (d - 1);
    }
    return total;
}

}  // namespace

std::span<const VertexId> Graph::sphere(int n) const {
    if (n < 0 || n > spec_.radius) throw std::out_of_range("sphere index outside [0, radius]");
    const int32_t a = sphere_start_[static_cast<size_t>(n)];
    const int32_t b = sphere_start_[static_cast<size_t>(n) + 1];
    return {by_dist_.data() + a, static_cast<size_t>(b - a)};
}

Graph Graph::build(const GraphSpec& spec) {
    validate(spec);
    Graph g;
    g.spec_ = spec;
    const int L = spec.radius;

    switch (spec.family) {
        case GraphFamily::Line: {
            g.n_ = 2 * L + 1;
            g.origin_ = L;  // id = coordinate + L
            g.degree_ = 2;
            g.dist_.resize(g.n_);
            g.adjacency_.resize(static_cast<size_t>(g.n_) * 2);
            g.coords_.resize(g.n_);
            for (int32_t v = 0; v < g.n_; ++v) {
                const int x = v - L;
                g.coords_[v] = x;
                g.dist_[v] = static_cast<int16_t>(std::abs(x));
                g.adjacency_[v * 2 + 0] = (x - 1 < -L) ? kExterior : v - 1;
                g.adjacency_[v * 2 + 1] = (x + 1 > L) ? kExterior : v + 1;
            }
            break;
        }
        case GraphFamily::Lattice: {
            const int m = spec.dimension;
            // Enumerate the L1 ball coordinate by coordinate, lexicographic order.
            std::vector<std::vector<int32_t>> pts;
            std::vector<int32_t> cur(m, 0);
            auto rec = [&](auto&& self, int axis, int slack) -> void {
                if (axis == m - 1) {
                    for (int x = -slack; x <= slack; ++x) {
                        cur[axis] = x;
                        pts.push_back(cur);
                        if (static_cast<int64_t>(pts.size()) > spec.vertex_budget)
                            throw GraphBuildError("lattice ball exceeds the vertex budget");
                    }
                    return;
                }
                for (int x = -slack; x <= slack; ++x) {
                    cur[axis] = x;
                    self(self, axis + 1, slack - std::abs(x));
                }
            };
            rec(rec, 0, L);
            std::sort(pts.begin(), pts.end());
            g.n_ = static_cast<int32_t>(pts.size());
            g.degree_ = 2 * m;
            std::map<std::vector<int32_t>, VertexId> index;
            for (int32_t v = 0; v < g.n_; ++v) index[pts[v]] = v;
            g.dist_.resize(g.n_);
            g.coords_.resize(static_cast<size_t>(g.n_) * m);
            g.adjacency_.assign(static_cast<size_t>(g.n_) * g.degree_, kExterior);
            for (int32_t v = 0; v < g.n_; ++v) {
                const auto& p = pts[v];
                int norm = 0;
                for (int a = 0; a < m; ++a) {
                    g.coords_[static_cast<size_t>(v) * m + a] = p[a];
                    norm += std::abs(p[a]);
                }
                g.dist_[v] = static_cast<int16_t>(norm);
                std::vector<int32_t> q = p;
                for (int a = 0; a < m; ++a) {
                    for (int dir = 0; dir < 2; ++dir) {
                        q[a] = p[a] + (dir == 0 ? -1 : +1);
                        auto it = index.find(q);
                        g.adjacency_[static_cast<size_t>(v) * g.degree_ + 2 * a + dir] =
                            (it == index.end()) ? kExterior : it->second;
                    }
                    q[a] = p[a];
                }
            }
            g.origin_ = index.at(std::vector<int32_t>(m, 0));
            break;
        }
        case GraphFamily::RegularTree: {
            const int d = spec.degree;
            const int64_t count = tree_ball_size(d, L);
            if (count > spec.vertex_budget)
                throw GraphBuildError("tree ball of radius " + std::to_string(L) +
                                      " has " + std::to_string(count) +
                                      " vertices, over the vertex budget");
            g.n_ = static_cast<int32_t>(count);
            g.origin_ = 0;
            g.degree_ = d;
            g.dist_.resize(g.n_);
            g.adjacency_.assign(static_cast<size_t>(g.n_) * d, kExterior);
            // Ids are assigned level by level; the root's children get slots
            // 0..d-1, elsewhere slot 0 is the parent and 1..d-1 the children.
            std::vector<int32_t> level_start(L + 2);
            level_start[0] = 0;
            level_start[1] = 1;
            int64_t sphere = d;
            for (int n = 1; n <= L; ++n) {
                level_start[n + 1] = static_cast<int32_t>(level_start[n] + sphere);
                sphere *= (d - 1);
            }
            g.dist_[0] = 0;
            for (int n = 1; n <= L; ++n) {
                const int32_t begin = level_start[n], end = level_start[n + 1];
                const int fan = (n == 1) ? d : d - 1;
                for (int32_t v = begin; v < end; ++v) {
                    g.dist_[v] = static_cast<int16_t>(n);
                    const int32_t rank = v - begin;
                    const int32_t parent =
                        (n == 1) ? 0 : level_start[n - 1] + rank / (d - 1);
                    const int parent_slot_in_child = 0;
                    g.adjacency_[static_cast<size_t>(v) * d + parent_slot_in_child] = parent;
                    if (n == 1) {
                        g.adjacency_[static_cast<size_t>(parent) * d + rank] = v;
                    } else {
                        const int child_slot = 1 + rank % (d - 1);
                        g.adjacency_[static_cast<size_t>(parent) * d + child_slot] = v;
                    }
                }
                (void)fan;
            }
            break;
        }
    }

    g.jump_slots_ = (spec.jump_kind == JumpKind::TotallyAsymmetric) ? 1 : g.degree_;

    g.by_dist_.resize(g.n_);
    std::iota(g.by_dist_.begin(), g.by_dist_.end(), 0);
    std::stable_sort(g.by_dist_.begin(), g.by_dist_.end(), [&](VertexId a, VertexId b) {
        if (g.dist_[a] != g.dist_[b]) return g.dist_[a] < g.dist_[b];
        return a < b;
    });
    g.sphere_start_.assign(static_cast<size_t>(L) + 2, 0);
    for (int32_t i = 0; i < g.n_; ++i) g.sphere_start_[g.dist_[g.by_dist_[i]] + 1]++;
    for (size_t n = 1; n < g.sphere_start_.size(); ++n) g.sphere_start_[n] += g.sphere_start_[n - 1];
    return g;
}

std::string Graph::label(VertexId v) const {
    if (v == kExterior) return "exterior";
    switch (spec_.family) {
        case GraphFamily::Line:
            return std::to_string(coords_[static_cast<size_t>(v)]);
        case GraphFamily::Lattice: {
            std::string s = "(";
            for (int a = 0; a < spec_.dimension; ++a) {
                if (a) s += ",";
                s += std::to_string(coords_[static_cast<size_t>(v) * spec_.dimension + a]);
            }
            return s + ")";
        }
        case GraphFamily::RegularTree:
            return "t" + std::to_string(v) + "@" + std::to_string(distance(v));
    }
    return "?";
}

bool is_transient_family(const GraphSpec& spec) {
    if (spec.family == GraphFamily::RegularTree) return true;
    if (spec.family == GraphFamily::Lattice && spec.dimension >= 3) return true;
    return false;
}

}  // namespace arw
