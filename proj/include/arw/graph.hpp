// Finite truncations of vertex-transitive graphs: the line Z, L1 balls of
// Z^dim, and balls of d-regular trees. The truncation keeps every vertex at
// graph distance <= radius from the origin; anything beyond is an absorbing
// exterior region (particles and walkers that step outside are deleted).
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace arw {

using VertexId = int32_t;
inline constexpr VertexId kExterior = -1;

enum class GraphFamily { Line, Lattice, RegularTree };
enum class JumpKind { Uniform, TotallyAsymmetric };

struct GraphSpec {
    GraphFamily family = GraphFamily::Line;
    int dimension = 1;  // Lattice only, >= 1
    int degree = 3;     // RegularTree only, >= 3
    int radius = 1;     // truncation ball B_L
    JumpKind jump_kind = JumpKind::Uniform;  // TotallyAsymmetric valid only on Line
    int64_t vertex_budget = 8'000'000;
};

class GraphBuildError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class Graph {
  public:
    static Graph build(const GraphSpec& spec);

    const GraphSpec& spec() const { return spec_; }
    VertexId origin() const { return origin_; }
    int32_t vertex_count() const { return n_; }
    int degree() const { return degree_; }
    int radius() const { return spec_.radius; }

    // Distance from v to the origin.
    int distance(VertexId v) const { return dist_[static_cast<size_t>(v)]; }

    // Neighbor in the infinite graph along a fixed slot; kExterior when it
    // falls outside the truncation ball.
    VertexId neighbor(VertexId v, int slot) const {
        return adjacency_[static_cast<size_t>(v) * degree_ + slot];
    }

    // Number of distinct jump destinations the jump distribution can pick.
    // Uniform: the full degree. Totally asymmetric on Z: one (always +1).
    int jump_slots() const { return jump_slots_; }
    VertexId jump_target(VertexId v, int slot) const {
        if (spec_.jump_kind == JumpKind::TotallyAsymmetric) return neighbor(v, 1);
        return neighbor(v, slot);
    }

    // Vertices at distance exactly n from the origin (the sphere A_n).
    std::span<const VertexId> sphere(int n) const;

    // All vertices ordered by (distance, id).
    std::span<const VertexId> by_distance() const { return {by_dist_.data(), by_dist_.size()}; }

    // Human-readable coordinates, for audit dumps and error messages.
    std::string label(VertexId v) const;

  private:
    Graph() = default;

    GraphSpec spec_;
    int32_t n_ = 0;
    VertexId origin_ = 0;
    int degree_ = 0;
    int jump_slots_ = 0;
    std::vector<VertexId> adjacency_;   // n * degree, kExterior marks outward edges
    std::vector<int16_t> dist_;
    std::vector<VertexId> by_dist_;     // vertices sorted by (distance, id)
    std::vector<int32_t> sphere_start_; // radius + 2 offsets into by_dist_
    std::vector<int32_t> coords_;       // Lattice: n * dimension; Line: n * 1
};

inline Graph build_graph(const GraphSpec& spec) { return Graph::build(spec); }

inline std::span<const VertexId> sphere_of(const Graph& g, int n) { return g.sphere(n); }

// Whether simple random walk on the infinite family escapes with positive
// probability (regular trees, and Z^dim for dim >= 3).
bool is_transient_family(const GraphSpec& spec);

}  // namespace arw
