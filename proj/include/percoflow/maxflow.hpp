#pragma once

// Exact maximal flow between two vertex sets of an undirected graph with
// integer capacities, plus stream and cut verification.
//
// A virtual super-source feeds every vertex of F₁ and a virtual super-sink
// drains every vertex of F₂; an undirected edge is a pair of antiparallel
// arcs sharing one capacity. The solver is Dinic's algorithm with an
// iterative blocking-flow search, exact on 62-bit integers.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "percoflow/capacities.hpp"
#include "percoflow/errors.hpp"
#include "percoflow/graph.hpp"

namespace percoflow {

inline constexpr Capacity kCapacityLimit = Capacity{1} << 62;

// (g, o): amount[e] of fluid on edge e, moving from edges[e][0] to
// edges[e][1] when along[e], and the other way otherwise.
struct Stream {
  std::vector<Capacity> amount;
  std::vector<bool> along;
};

struct Cutset {
  std::vector<EdgeId> edges;
  Capacity capacity = 0;
};

struct FlowResult {
  Capacity value = 0;
  Stream stream;
  Cutset cut;
  std::vector<VertexId> source_side;

  double real_value() const { return dequantize(value); }
};

inline Capacity cut_capacity(std::span<const EdgeId> edges,
                             std::span<const Capacity> caps) {
  Capacity total = 0;
  for (EdgeId e : edges) {
    if (__builtin_add_overflow(total, caps[e], &total) || total >= kCapacityLimit) {
      throw Error(ErrorKind::CapacityOverflow, "cut capacity exceeds 2^62");
    }
  }
  return total;
}

namespace detail {

inline void check_terminals(std::size_t num_vertices, std::span<const VertexId> sources,
                            std::span<const VertexId> sinks) {
  if (sources.empty() || sinks.empty()) {
    throw Error(ErrorKind::EmptyTerminal, "source or sink set is empty");
  }
  std::vector<char> mark(num_vertices, 0);
  for (VertexId s : sources) {
    if (s >= num_vertices) throw Error(ErrorKind::InvalidArgument, "source out of range");
    mark[s] = 1;
  }
  for (VertexId t : sinks) {
    if (t >= num_vertices) throw Error(ErrorKind::InvalidArgument, "sink out of range");
    if (mark[t] == 1) {
      throw Error(ErrorKind::OverlappingTerminals, "source and sink sets intersect");
    }
  }
}

}  // namespace detail

class MaxFlowSolver {
 public:
  MaxFlowSolver(const Graph& graph, std::span<const VertexId> sources,
                std::span<const VertexId> sinks)
      : graph_(graph),
        num_nodes_(graph.num_vertices + 2),
        source_(static_cast<VertexId>(graph.num_vertices)),
        sink_(static_cast<VertexId>(graph.num_vertices + 1)) {
    detail::check_terminals(graph.num_vertices, sources, sinks);
    const std::size_t m = graph.num_edges();
    head_.reserve(2 * (m + sources.size() + sinks.size()));
    for (const auto& e : graph.edges) {
      head_.push_back(e[1]);
      head_.push_back(e[0]);
    }
    terminal_arcs_begin_ = head_.size();
    for (VertexId s : sources) {
      head_.push_back(s);
      head_.push_back(source_);
    }
    for (VertexId t : sinks) {
      head_.push_back(sink_);
      head_.push_back(t);
    }
    const std::size_t arcs = head_.size();
    offset_.assign(num_nodes_ + 1, 0);
    for (std::size_t a = 0; a < arcs; ++a) ++offset_[tail(a) + 1];
    for (std::size_t v = 0; v < num_nodes_; ++v) offset_[v + 1] += offset_[v];
    adjacency_.resize(arcs);
    std::vector<std::size_t> fill(offset_.begin(), offset_.end() - 1);
    for (std::size_t a = 0; a < arcs; ++a) adjacency_[fill[tail(a)]++] = static_cast<std::uint32_t>(a);
    residual_.resize(arcs);
    level_.resize(num_nodes_);
    current_.resize(num_nodes_);
    queue_.reserve(num_nodes_);
  }

  const Graph& graph() const { return graph_; }

  FlowResult solve(std::span<const Capacity> caps) {
    FlowResult out;
    solve(caps, out);
    return out;
  }

  // Reuses the buffers of `out`.
  void solve(std::span<const Capacity> caps, FlowResult& out) {
    const std::size_t m = graph_.num_edges();
    if (caps.size() != m) throw Error(ErrorKind::InvalidArgument, "capacity vector size mismatch");
    Capacity total = 0;
    for (std::size_t e = 0; e < m; ++e) {
      if (caps[e] < 0) throw Error(ErrorKind::InvalidArgument, "negative capacity");
      if (__builtin_add_overflow(total, caps[e], &total) || total >= kCapacityLimit) {
        throw Error(ErrorKind::CapacityOverflow, "sum of capacities exceeds 2^62");
      }
      residual_[2 * e] = caps[e];
      residual_[2 * e + 1] = caps[e];
    }
    const Capacity infinite = total + 1;
    for (std::size_t a = terminal_arcs_begin_; a < head_.size(); a += 2) {
      residual_[a] = infinite;
      residual_[a + 1] = 0;
    }

    Capacity flow = 0;
    while (build_levels()) flow += blocking_flow();

    // The last level graph is exactly the residual reachability from F₁.
    out.value = flow;
    out.source_side.clear();
    for (VertexId v = 0; v < graph_.num_vertices; ++v) {
      if (level_[v] >= 0) out.source_side.push_back(v);
    }
    out.cut.edges.clear();
    for (EdgeId e = 0; e < m; ++e) {
      const auto& [u, v] = graph_.edges[e];
      if ((level_[u] >= 0) != (level_[v] >= 0)) out.cut.edges.push_back(e);
    }
    out.cut.capacity = cut_capacity(out.cut.edges, caps);
    if (out.cut.capacity != flow) {
      throw std::logic_error("max-flow/min-cut mismatch: solver bug");
    }
    out.stream.amount.resize(m);
    out.stream.along.resize(m);
    for (std::size_t e = 0; e < m; ++e) {
      const Capacity net = caps[e] - residual_[2 * e];
      out.stream.amount[e] = net < 0 ? -net : net;
      out.stream.along[e] = net >= 0;
    }
  }

 private:
  VertexId tail(std::size_t arc) const { return head_[arc ^ 1]; }

  bool build_levels() {
    std::fill(level_.begin(), level_.end(), -1);
    queue_.clear();
    queue_.push_back(source_);
    level_[source_] = 0;
    for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
      const VertexId u = queue_[qi];
      for (std::size_t i = offset_[u]; i < offset_[u + 1]; ++i) {
        const std::uint32_t a = adjacency_[i];
        const VertexId v = head_[a];
        if (residual_[a] > 0 && level_[v] < 0) {
          level_[v] = level_[u] + 1;
          queue_.push_back(v);
        }
      }
    }
    return level_[sink_] >= 0;
  }

  Capacity blocking_flow() {
    for (std::size_t v = 0; v < num_nodes_; ++v) current_[v] = offset_[v];
    Capacity pushed = 0;
    path_.clear();
    VertexId u = source_;
    while (true) {
      if (u == sink_) {
        Capacity delta = std::numeric_limits<Capacity>::max();
        for (std::uint32_t a : path_) delta = std::min(delta, residual_[a]);
        std::size_t first_saturated = path_.size();
        for (std::size_t i = 0; i < path_.size(); ++i) {
          residual_[path_[i]] -= delta;
          residual_[path_[i] ^ 1] += delta;
          if (residual_[path_[i]] == 0 && first_saturated == path_.size()) first_saturated = i;
        }
        pushed += delta;
        path_.resize(first_saturated);
        u = path_.empty() ? source_ : head_[path_.back()];
        continue;
      }
      bool advanced = false;
      for (std::size_t& i = current_[u]; i < offset_[u + 1]; ++i) {
        const std::uint32_t a = adjacency_[i];
        const VertexId v = head_[a];
        if (residual_[a] > 0 && level_[v] == level_[u] + 1) {
          path_.push_back(a);
          u = v;
          advanced = true;
          break;
        }
      }
      if (advanced) continue;
      // Dead end: retreat.
      if (u == source_) break;
      level_[u] = -2;
      const std::uint32_t a = path_.back();
      path_.pop_back();
      u = tail(a);
      ++current_[u];
    }
    return pushed;
  }

  const Graph& graph_;
  std::size_t num_nodes_;
  VertexId source_;
  VertexId sink_;
  std::vector<VertexId> head_;
  std::size_t terminal_arcs_begin_ = 0;
  std::vector<std::size_t> offset_;
  std::vector<std::uint32_t> adjacency_;
  std::vector<Capacity> residual_;
  std::vector<std::int32_t> level_;
  std::vector<std::size_t> current_;
  std::vector<VertexId> queue_;
  std::vector<std::uint32_t> path_;
};

inline FlowResult max_flow(const Graph& graph, std::span<const VertexId> sources,
                           std::span<const VertexId> sinks,
                           std::span<const Capacity> caps) {
  MaxFlowSolver solver(graph, sources, sinks);
  return solver.solve(caps);
}

// Net fluid delivered into F₂ through edges with exactly one endpoint in F₂.
inline Capacity stream_flow(const Stream& stream, const Graph& graph,
                            std::span<const VertexId> sinks) {
  std::vector<char> in_sink(graph.num_vertices, 0);
  for (VertexId t : sinks) in_sink[t] = 1;
  Capacity total = 0;
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const auto& [u, v] = graph.edges[e];
    if (in_sink[u] == in_sink[v]) continue;
    // Orientation towards the sink endpoint counts positively.
    const bool towards_v = stream.along[e];
    const bool into_sink = in_sink[v] ? towards_v : !towards_v;
    total += into_sink ? stream.amount[e] : -stream.amount[e];
  }
  return total;
}

// Capacity bounds on every edge, conservation at every vertex outside
// F₁ ∪ F₂, and the delivered flow equal to `claimed_value`.
inline bool verify_stream(const Stream& stream, const Graph& graph,
                          std::span<const VertexId> sources,
                          std::span<const VertexId> sinks,
                          std::span<const Capacity> caps, Capacity claimed_value) {
  const std::size_t m = graph.num_edges();
  if (stream.amount.size() != m || stream.along.size() != m || caps.size() != m) return false;
  std::vector<Capacity> balance(graph.num_vertices, 0);
  for (std::size_t e = 0; e < m; ++e) {
    const Capacity g = stream.amount[e];
    if (g < 0 || g > caps[e]) return false;
    const auto& [u, v] = graph.edges[e];
    const VertexId from = stream.along[e] ? u : v;
    const VertexId to = stream.along[e] ? v : u;
    balance[from] -= g;
    balance[to] += g;
  }
  std::vector<char> terminal(graph.num_vertices, 0);
  for (VertexId s : sources) terminal[s] = 1;
  for (VertexId t : sinks) terminal[t] = 1;
  for (std::size_t v = 0; v < graph.num_vertices; ++v) {
    if (!terminal[v] && balance[v] != 0) return false;
  }
  return stream_flow(stream, graph, sinks) == claimed_value;
}

// Does removing `cut_edges` leave no path from F₁ to F₂?
inline bool is_cut(std::span<const EdgeId> cut_edges, std::span<const VertexId> sources,
                   std::span<const VertexId> sinks, const Graph& graph) {
  std::vector<char> removed(graph.num_edges(), 0);
  for (EdgeId e : cut_edges) removed[e] = 1;
  const Incidence inc(graph);
  std::vector<char> seen(graph.num_vertices, 0);
  std::vector<VertexId> queue(sources.begin(), sources.end());
  for (VertexId s : sources) seen[s] = 1;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const VertexId u = queue[qi];
    for (std::size_t i = inc.offset[u]; i < inc.offset[u + 1]; ++i) {
      const EdgeId e = inc.incidence[i];
      if (removed[e]) continue;
      const VertexId w = graph.edges[e][0] == u ? graph.edges[e][1] : graph.edges[e][0];
      if (!seen[w]) {
        seen[w] = 1;
        queue.push_back(w);
      }
    }
  }
  return std::none_of(sinks.begin(), sinks.end(), [&](VertexId t) { return seen[t] != 0; });
}

}  // namespace percoflow
