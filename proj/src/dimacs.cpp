#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "psipm/io.hpp"

namespace psipm {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::string format_double(double v) {
  if (v == std::floor(v) && std::abs(v) < 9e15) {
    return std::to_string(static_cast<std::int64_t>(v));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T field(std::istringstream& ss, Index line, const char* what) {
  T v{};
  if (!(ss >> v)) throw ParseError(std::string("expected ") + what, line);
  return v;
}

void expect_end(std::istringstream& ss, Index line) {
  std::string extra;
  if (ss >> extra) throw ParseError("unexpected trailing field '" + extra + "'", line);
}

}  // namespace

Problem read_dimacs_mcf(std::istream& in, ReadWarnings* warnings) {
  Index m = -1, n = -1;
  std::int64_t scale = 1;
  std::vector<std::int64_t> supply;
  std::vector<Edge> edges;
  Vector cost;
  std::vector<std::pair<Index, double>> caps;  // (line, capacity)

  std::string text;
  Index line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    std::istringstream ss(text);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "c") {
      std::string key;
      if (ss >> key && key == "scale") {
        scale = field<std::int64_t>(ss, line, "scale denominator");
        if (scale < 1) throw ParseError("scale denominator must be positive", line);
      }
      continue;
    }
    if (tag == "p") {
      if (m >= 0) throw ParseError("duplicate problem line", line);
      if (field<std::string>(ss, line, "problem type") != "min") {
        throw ParseError("only 'p min' problems are supported", line);
      }
      m = field<Index>(ss, line, "node count");
      n = field<Index>(ss, line, "arc count");
      expect_end(ss, line);
      if (m < 1 || n < 0) throw ParseError("invalid problem dimensions", line);
      supply.assign(static_cast<std::size_t>(m), 0);
      edges.reserve(static_cast<std::size_t>(n));
      cost.reserve(static_cast<std::size_t>(n));
      continue;
    }
    if (m < 0) throw ParseError("'" + tag + "' line before the problem line", line);
    if (tag == "n") {
      const auto id = field<Index>(ss, line, "node id");
      const auto flow = field<std::int64_t>(ss, line, "node supply");
      expect_end(ss, line);
      if (id < 1 || id > m) throw ParseError("node id out of range", line);
      supply[id - 1] += flow;
    } else if (tag == "a") {
      const auto src = field<Index>(ss, line, "arc source");
      const auto dst = field<Index>(ss, line, "arc target");
      const auto low = field<double>(ss, line, "arc lower bound");
      const auto cap = field<double>(ss, line, "arc capacity");
      const auto c = field<double>(ss, line, "arc cost");
      expect_end(ss, line);
      if (src < 1 || src > m || dst < 1 || dst > m) throw ParseError("arc endpoint out of range", line);
      if (low != 0.0) throw ParseError("nonzero lower bounds are not supported", line);
      if (static_cast<Index>(edges.size()) == n) throw ParseError("more arcs than declared", line);
      edges.push_back({src - 1, dst - 1});
      cost.push_back(c);
      caps.emplace_back(line, cap);
    } else {
      throw ParseError("unknown line type '" + tag + "'", line);
    }
  }
  if (m < 0) throw ParseError("missing problem line", line);
  if (static_cast<Index>(edges.size()) != n) {
    throw ParseError("declared " + std::to_string(n) + " arcs, found " + std::to_string(edges.size()), line);
  }

  ExactSupply b;
  b.denominator = scale;
  b.numerators.resize(supply.size());
  std::int64_t total = 0;
  for (std::size_t v = 0; v < supply.size(); ++v) {
    b.numerators[v] = -supply[v];
    total += std::max<std::int64_t>(supply[v], 0);
  }
  if (warnings) {
    for (const auto& [l, cap] : caps) {
      if (cap < static_cast<double>(total)) {
        warnings->messages.push_back("line " + std::to_string(l) + ": capacity " + format_double(cap) +
                                     " is below the total supply and is ignored");
      }
    }
  }
  return Problem(Graph(m, std::move(edges), std::move(cost)), std::move(b));
}

Problem read_dimacs_mcf(const std::string& path, ReadWarnings* warnings) {
  auto in = open_in(path);
  return read_dimacs_mcf(in, warnings);
}

void write_dimacs_mcf(const Problem& prob, std::ostream& out) {
  const Graph& g = prob.graph();
  ExactSupply b;
  if (prob.exact_supply()) {
    b = *prob.exact_supply();
  } else {
    // Without an exact form the balances must be integral.
    b.numerators.reserve(prob.b().size());
    for (double v : prob.b()) {
      if (v != std::floor(v)) throw ValidationError("DIMACS output needs integral or exact supplies");
      b.numerators.push_back(static_cast<std::int64_t>(v));
    }
  }
  std::int64_t total = 0;
  for (std::int64_t v : b.numerators) total += std::max<std::int64_t>(-v, 0);
  const std::int64_t cap = std::max<std::int64_t>(total, 1);

  out << "c psipm instance\n";
  if (b.denominator != 1) out << "c scale " << b.denominator << '\n';
  out << "p min " << g.node_count() << ' ' << g.edge_count() << '\n';
  for (std::size_t v = 0; v < b.numerators.size(); ++v) {
    if (b.numerators[v] != 0) out << "n " << v + 1 << ' ' << -b.numerators[v] << '\n';
  }
  const auto c = g.cost();
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    const Edge& ed = g.edges()[e];
    out << "a " << ed.tail + 1 << ' ' << ed.head + 1 << " 0 " << cap << ' ' << format_double(c[e]) << '\n';
  }
}

void write_dimacs_mcf(const Problem& prob, const std::string& path) {
  auto out = open_out(path);
  write_dimacs_mcf(prob, out);
  if (!out) throw Error("failed writing '" + path + "'");
}

void write_solution(const SolutionFile& sol, std::ostream& out) {
  char buf[64];
  out << "c psipm solution\n";
  std::snprintf(buf, sizeof buf, "%.17g", sol.objective);
  out << "s " << sol.edge_count << ' ' << buf << '\n';
  for (std::size_t e = 0; e < sol.flow.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g", sol.flow[e]);
    out << "f " << e + 1 << ' ' << buf << '\n';
  }
  for (std::size_t v = 0; v < sol.potential.size(); ++v) {
    std::snprintf(buf, sizeof buf, "%.17g", sol.potential[v]);
    out << "p " << v + 1 << ' ' << buf << '\n';
  }
}

void write_solution(const SolutionFile& sol, const std::string& path) {
  auto out = open_out(path);
  write_solution(sol, out);
  if (!out) throw Error("failed writing '" + path + "'");
}

SolutionFile read_solution(std::istream& in, Index node_count) {
  SolutionFile sol;
  bool header = false;
  std::string text;
  Index line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::istringstream ss(text);
    std::string tag;
    if (!(ss >> tag) || tag == "c") continue;
    if (tag == "s") {
      sol.edge_count = field<Index>(ss, line, "edge count");
      sol.objective = field<double>(ss, line, "objective");
      if (sol.edge_count < 0) throw ParseError("negative edge count", line);
      sol.flow.assign(static_cast<std::size_t>(sol.edge_count), std::numeric_limits<double>::quiet_NaN());
      sol.potential.assign(static_cast<std::size_t>(node_count), 0.0);
      header = true;
    } else if (!header) {
      throw ParseError("solution line before the 's' header", line);
    } else if (tag == "f" || tag == "p") {
      const auto id = field<Index>(ss, line, "index");
      const auto v = field<double>(ss, line, "value");
      Vector& target = tag == "f" ? sol.flow : sol.potential;
      if (id < 1 || id > static_cast<Index>(target.size())) throw ParseError("index out of range", line);
      target[id - 1] = v;
    } else {
      throw ParseError("unknown line type '" + tag + "'", line);
    }
  }
  if (!header) throw ParseError("missing 's' header", line);
  for (double v : sol.flow) {
    if (std::isnan(v)) throw ParseError("solution does not list every edge flow", line);
  }
  return sol;
}

SolutionFile read_solution(const std::string& path, Index node_count) {
  auto in = open_in(path);
  return read_solution(in, node_count);
}

}  // namespace psipm
