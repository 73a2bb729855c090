#pragma once

// Instance generation and file formats: random connected graphs, balanced
// sparse loads, DIMACS min-cost-flow, matrix-market edge lists, and the
// solution files written by the CLI.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "psipm/problem.hpp"

namespace psipm {

/// Uniform integer in [0, bound) by rejection on a 64-bit Mersenne twister,
/// so the stream is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  std::uint64_t below(std::uint64_t bound);
  /// true with probability num / den.
  bool chance(std::uint64_t num, std::uint64_t den) { return below(den) < num; }

 private:
  std::mt19937_64 engine_;
};

enum class GraphFamily { uniform, erdrey, pref, smallw, kleinberg };
std::string_view to_string(GraphFamily f);
GraphFamily parse_family(std::string_view name);

/// Degrees count undirected edges. Only the uniform family enforces
/// degree_max; the others follow their own construction (tagged experimental).
struct GeneratorSpec {
  Index node_count = 1000;
  Index degree_min = 1;
  Index degree_max = 10;
  double degree_avg_target = 5.0;
  std::uint64_t seed = 1;
  GraphFamily family = GraphFamily::uniform;
  void validate() const;
};

/// Undirected connected graph; every edge is stored once as (u, v), u < v,
/// sorted, with unit cost.
Graph generate_graph(const GeneratorSpec& spec);

/// Replaces each edge (u, v) by the opposite arcs (u, v), (v, u), keeping its
/// cost on both.
Graph bidirect(const Graph& g);

struct LoadSpec {
  double nonzero_fraction = 0.10;
  std::uint64_t seed = 1;
  std::int64_t magnitude_max = 1000;
  void validate() const;
};

/// max(2, ceil(fraction m)) distinct nodes get integer magnitudes in
/// [1, magnitude_max] with alternating signs; the last one absorbs the sum so
/// the total is exactly zero (it is dropped if that makes it zero). The
/// denominator is the total positive mass, so b has unit mass.
ExactSupply generate_load(Index node_count, const LoadSpec& spec);

/// Generated graph, made bidirected, with the generated load.
Problem make_instance(const GeneratorSpec& gspec, const LoadSpec& lspec);

struct ReadWarnings {
  std::vector<std::string> messages;
};

/// DIMACS min-cost flow. "n ID FLOW" supplies become b = -FLOW / scale, where
/// scale comes from a "c scale D" comment (default 1). Nonzero lower bounds
/// are rejected; capacities are ignored, with a warning when one is below the
/// total supply.
Problem read_dimacs_mcf(std::istream& in, ReadWarnings* warnings = nullptr);
Problem read_dimacs_mcf(const std::string& path, ReadWarnings* warnings = nullptr);
void write_dimacs_mcf(const Problem& prob, std::ostream& out);
void write_dimacs_mcf(const Problem& prob, const std::string& path);

struct MatrixMarketGraph {
  Graph graph;
  Index self_loops_dropped = 0;
  Index duplicates_merged = 0;
  Index original_node_count = 0;
  std::vector<Index> original_index;  // per node of `graph`, 0-based row in the file
};

/// Symmetric coordinate file (pattern, real or integer). Off-diagonal entries
/// become edges with cost |value| (1 for pattern files). A disconnected graph
/// is an error unless largest_component is set.
MatrixMarketGraph read_matrix_market_edges(std::istream& in, bool largest_component = false);
MatrixMarketGraph read_matrix_market_edges(const std::string& path, bool largest_component = false);

struct SolutionFile {
  Index edge_count = 0;
  double objective = 0.0;
  Vector flow;
  Vector potential;
};

void write_solution(const SolutionFile& sol, std::ostream& out);
void write_solution(const SolutionFile& sol, const std::string& path);
SolutionFile read_solution(std::istream& in, Index node_count);
SolutionFile read_solution(const std::string& path, Index node_count);

}  // namespace psipm
