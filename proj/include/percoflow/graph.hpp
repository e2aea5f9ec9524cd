#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace percoflow {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

// Undirected simple graph as an edge list; edges[e] = {u, v}.
struct Graph {
  std::size_t num_vertices = 0;
  std::vector<std::array<VertexId, 2>> edges;

  std::size_t num_edges() const { return edges.size(); }
};

// Compressed incidence lists: for vertex v, incident edge ids are
// incidence[offset[v] .. offset[v+1]).
struct Incidence {
  std::vector<std::size_t> offset;
  std::vector<EdgeId> incidence;

  explicit Incidence(const Graph& g) : offset(g.num_vertices + 1, 0) {
    for (const auto& e : g.edges) {
      ++offset[e[0] + 1];
      ++offset[e[1] + 1];
    }
    for (std::size_t v = 0; v < g.num_vertices; ++v) offset[v + 1] += offset[v];
    incidence.resize(offset.back());
    std::vector<std::size_t> fill(offset.begin(), offset.end() - 1);
    for (EdgeId e = 0; e < g.edges.size(); ++e) {
      incidence[fill[g.edges[e][0]]++] = e;
      incidence[fill[g.edges[e][1]]++] = e;
    }
  }
};

}  // namespace percoflow
