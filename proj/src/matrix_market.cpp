#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "psipm/io.hpp"

namespace psipm {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

MatrixMarketGraph read_matrix_market_edges(std::istream& in, bool largest_component) {
  std::string text;
  Index line = 0;
  if (!std::getline(in, text)) throw ParseError("empty file", 1);
  ++line;
  std::istringstream hs(text);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") {
    throw ParseError("missing %%MatrixMarket matrix header", line);
  }
  if (lower(format) != "coordinate") throw ParseError("only coordinate format is supported", line);
  field = lower(field);
  const bool pattern = field == "pattern";
  if (!pattern && field != "real" && field != "integer") {
    throw ParseError("unsupported field type '" + field + "'", line);
  }
  if (lower(symmetry) != "symmetric") {
    throw ParseError("matrix is not declared symmetric ('" + symmetry + "')", line);
  }

  Index rows = -1, cols = -1, entries = -1;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty() || text[0] == '%') continue;
    std::istringstream ss(text);
    if (!(ss >> rows >> cols >> entries)) throw ParseError("malformed size line", line);
    break;
  }
  if (rows < 0) throw ParseError("missing size line", line);
  if (rows != cols) throw ParseError("matrix is not square", line);
  if (rows < 1) throw ParseError("matrix has no rows", line);

  MatrixMarketGraph out{Graph::with_unit_costs(1, {}), 0, 0, rows, {}};
  std::map<std::pair<Index, Index>, double> weight;
  Index seen = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty() || text[0] == '%') continue;
    std::istringstream ss(text);
    Index i = 0, j = 0;
    double v = 1.0;
    if (!(ss >> i >> j)) throw ParseError("malformed entry", line);
    if (!pattern && !(ss >> v)) throw ParseError("missing entry value", line);
    if (i < 1 || i > rows || j < 1 || j > rows) throw ParseError("entry index out of range", line);
    if (!std::isfinite(v)) throw ParseError("non-finite entry value", line);
    ++seen;
    if (i == j) {
      ++out.self_loops_dropped;
      continue;
    }
    const std::pair<Index, Index> key{std::min(i, j) - 1, std::max(i, j) - 1};
    if (!weight.emplace(key, std::abs(v)).second) ++out.duplicates_merged;
  }
  if (seen != entries) {
    throw ParseError("declared " + std::to_string(entries) + " entries, found " + std::to_string(seen), line);
  }

  std::vector<Edge> edges;
  Vector cost;
  edges.reserve(weight.size());
  for (const auto& [key, w] : weight) {
    edges.push_back({key.first, key.second});
    cost.push_back(w);
  }

  Components comp = connected_components(rows, edges);
  out.original_index.resize(static_cast<std::size_t>(rows));
  for (Index v = 0; v < rows; ++v) out.original_index[v] = v;
  if (comp.count > 1) {
    if (!largest_component) {
      throw ValidationError("graph has " + std::to_string(comp.count) +
                            " connected components; request the largest component explicitly");
    }
    std::vector<Index> size(static_cast<std::size_t>(comp.count), 0);
    for (Index v = 0; v < rows; ++v) ++size[comp.label[v]];
    const Index keep = std::max_element(size.begin(), size.end()) - size.begin();
    std::vector<Index> relabel(static_cast<std::size_t>(rows), -1);
    out.original_index.clear();
    for (Index v = 0; v < rows; ++v) {
      if (comp.label[v] == keep) {
        relabel[v] = static_cast<Index>(out.original_index.size());
        out.original_index.push_back(v);
      }
    }
    std::vector<Edge> kept;
    Vector kept_cost;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (relabel[edges[e].tail] >= 0) {
        kept.push_back({relabel[edges[e].tail], relabel[edges[e].head]});
        kept_cost.push_back(cost[e]);
      }
    }
    edges = std::move(kept);
    cost = std::move(kept_cost);
  }
  out.graph = Graph(static_cast<Index>(out.original_index.size()), std::move(edges), std::move(cost));
  return out;
}

MatrixMarketGraph read_matrix_market_edges(const std::string& path, bool largest_component) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return read_matrix_market_edges(in, largest_component);
}

}  // namespace psipm
