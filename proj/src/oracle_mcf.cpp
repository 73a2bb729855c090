#include "psipm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace psipm {

Vector FlowSolution::flow() const {
  Vector f(flow_num.size());
  for (std::size_t e = 0; e < f.size(); ++e) {
    f[e] = static_cast<double>(flow_num[e]) / static_cast<double>(denominator);
  }
  return f;
}

Vector FlowSolution::potentials() const { return Vector(potential.begin(), potential.end()); }

namespace {

struct IntegerInstance {
  std::vector<std::int64_t> cost;
  std::vector<std::int64_t> demand;  // b numerators: positive at sinks
  std::int64_t denominator = 1;
};

IntegerInstance integer_form(const Problem& prob) {
  IntegerInstance out;
  for (double c : prob.graph().cost()) {
    if (c != std::floor(c) || c > 4e18) throw ValidationError("the exact oracle needs integral costs");
    out.cost.push_back(static_cast<std::int64_t>(c));
  }
  if (prob.exact_supply()) {
    out.demand = prob.exact_supply()->numerators;
    out.denominator = prob.exact_supply()->denominator;
  } else {
    for (double v : prob.b()) {
      if (v != std::floor(v)) throw ValidationError("the exact oracle needs an exact or integral load");
      out.demand.push_back(static_cast<std::int64_t>(v));
    }
  }
  __int128 sum = 0;
  for (std::int64_t v : out.demand) sum += v;
  if (sum != 0) throw InfeasibleError("load vector does not sum to zero");
  return out;
}

// Residual network: arc 2e is edge e forward (unbounded), arc 2e+1 its reverse
// with capacity equal to the current flow.
class Residual {
 public:
  Residual(const Graph& g, const std::vector<std::int64_t>& cost)
      : m_(g.node_count()), cost_(cost), flow_(cost.size(), 0) {
    const auto edges = g.edges();
    from_.resize(2 * edges.size());
    to_.resize(2 * edges.size());
    std::vector<Index> count(static_cast<std::size_t>(m_) + 1, 0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      from_[2 * e] = to_[2 * e + 1] = edges[e].tail;
      to_[2 * e] = from_[2 * e + 1] = edges[e].head;
      ++count[edges[e].tail + 1];
      ++count[edges[e].head + 1];
    }
    for (Index v = 0; v < m_; ++v) count[v + 1] += count[v];
    start_ = count;
    adj_.resize(2 * edges.size());
    for (std::size_t a = 0; a < from_.size(); ++a) adj_[count[from_[a]]++] = static_cast<Index>(a);
  }

  Index node_count() const { return m_; }
  std::span<const Index> out_arcs(Index v) const {
    return std::span<const Index>(adj_).subspan(start_[v], start_[v + 1] - start_[v]);
  }
  Index head(Index a) const { return to_[a]; }
  std::int64_t arc_cost(Index a) const { return a % 2 == 0 ? cost_[a / 2] : -cost_[a / 2]; }
  std::int64_t capacity(Index a) const {
    return a % 2 == 0 ? std::numeric_limits<std::int64_t>::max() : flow_[a / 2];
  }
  void push(Index a, std::int64_t amount) { flow_[a / 2] += a % 2 == 0 ? amount : -amount; }
  const std::vector<std::int64_t>& flow() const { return flow_; }

 private:
  Index m_;
  const std::vector<std::int64_t>& cost_;
  std::vector<std::int64_t> flow_;
  std::vector<Index> from_, to_;
  std::vector<Index> start_, adj_;
};

}  // namespace

FlowSolution solve_mcf_exact(const Problem& prob) {
  const Graph& g = prob.graph();
  IntegerInstance inst = integer_form(prob);
  const Index m = g.node_count();
  Residual net(g, inst.cost);

  // excess > 0: mass still to send; < 0: mass still to receive.
  std::vector<std::int64_t> excess(static_cast<std::size_t>(m));
  for (Index v = 0; v < m; ++v) excess[v] = -inst.demand[v];
  std::vector<std::int64_t> pi(static_cast<std::size_t>(m), 0);

  FlowSolution sol;
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> dist(static_cast<std::size_t>(m));
  std::vector<char> settled(static_cast<std::size_t>(m));
  std::vector<Index> level(static_cast<std::size_t>(m)), cursor(static_cast<std::size_t>(m));
  std::vector<Index> path;

  auto reduced = [&](Index a, Index from) { return net.arc_cost(a) + pi[from] - pi[net.head(a)]; };
  auto admissible = [&](Index a, Index from) { return net.capacity(a) > 0 && reduced(a, from) == 0; };

  while (true) {
    bool any = std::any_of(excess.begin(), excess.end(), [](std::int64_t v) { return v > 0; });
    if (!any) break;

    // Dijkstra on reduced costs from every node with excess, stopped at the
    // first node with a deficit.
    using Item = std::pair<std::int64_t, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(settled.begin(), settled.end(), 0);
    for (Index v = 0; v < m; ++v) {
      if (excess[v] > 0) {
        dist[v] = 0;
        heap.emplace(0, v);
      }
    }
    std::int64_t reach = -1;
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (settled[v] || d != dist[v]) continue;
      settled[v] = 1;
      if (excess[v] < 0) {
        reach = d;
        break;
      }
      for (Index a : net.out_arcs(v)) {
        if (net.capacity(a) <= 0) continue;
        const Index w = net.head(a);
        const std::int64_t nd = d + reduced(a, v);
        if (nd < dist[w]) {
          dist[w] = nd;
          heap.emplace(nd, w);
        }
      }
    }
    if (reach < 0) throw InfeasibleError("no path from a supply node to a demand node");
    ++sol.shortest_path_rounds;
    for (Index v = 0; v < m; ++v) pi[v] += settled[v] ? dist[v] : reach;

    // Blocking flows on the admissible (zero reduced cost) subgraph.
    while (true) {
      std::fill(level.begin(), level.end(), -1);
      std::queue<Index> bfs;
      for (Index v = 0; v < m; ++v) {
        if (excess[v] > 0) {
          level[v] = 0;
          bfs.push(v);
        }
      }
      bool found = false;
      while (!bfs.empty()) {
        Index v = bfs.front();
        bfs.pop();
        if (excess[v] < 0) found = true;
        for (Index a : net.out_arcs(v)) {
          const Index w = net.head(a);
          if (level[w] < 0 && admissible(a, v)) {
            level[w] = level[v] + 1;
            bfs.push(w);
          }
        }
      }
      if (!found) break;

      std::fill(cursor.begin(), cursor.end(), 0);
      for (Index s = 0; s < m; ++s) {
        while (excess[s] > 0) {
          // Depth-first search along increasing levels with current-arc pointers.
          path.clear();
          Index v = s;
          bool blocked = false;
          while (v == s || excess[v] >= 0) {
            auto arcs = net.out_arcs(v);
            bool advanced = false;
            for (; cursor[v] < static_cast<Index>(arcs.size()); ++cursor[v]) {
              const Index a = arcs[cursor[v]];
              const Index w = net.head(a);
              if (level[w] == level[v] + 1 && admissible(a, v)) {
                path.push_back(a);
                v = w;
                advanced = true;
                break;
              }
            }
            if (advanced) continue;
            level[v] = -1;
            if (path.empty()) {
              blocked = true;
              break;
            }
            path.pop_back();
            v = path.empty() ? s : net.head(path.back());
            ++cursor[v];
          }
          if (blocked) break;
          std::int64_t amount = std::min(excess[s], -excess[v]);
          for (Index a : path) amount = std::min(amount, net.capacity(a));
          for (Index a : path) net.push(a, amount);
          excess[s] -= amount;
          excess[v] += amount;
          ++sol.augmentations;
        }
      }
    }
  }

  sol.flow_num = net.flow();
  sol.denominator = inst.denominator;
  sol.potential = pi;
  __int128 obj = 0;
  for (std::size_t e = 0; e < sol.flow_num.size(); ++e) obj += static_cast<__int128>(inst.cost[e]) * sol.flow_num[e];
  sol.objective = static_cast<double>(static_cast<long double>(obj) / static_cast<long double>(inst.denominator));
  return sol;
}

bool verify_certificate(const Problem& prob, const FlowSolution& sol) {
  const Graph& g = prob.graph();
  if (static_cast<Index>(sol.flow_num.size()) != g.edge_count() ||
      static_cast<Index>(sol.potential.size()) != g.node_count()) {
    return false;
  }
  IntegerInstance inst;
  try {
    inst = integer_form(prob);
  } catch (const Error&) {
    return false;
  }
  if (sol.denominator != inst.denominator) return false;
  std::vector<__int128> balance(static_cast<std::size_t>(g.node_count()), 0);
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::int64_t f = sol.flow_num[e];
    if (f < 0) return false;
    balance[edges[e].head] += f;
    balance[edges[e].tail] -= f;
    const __int128 rc = static_cast<__int128>(inst.cost[e]) - sol.potential[edges[e].head] +
                        sol.potential[edges[e].tail];
    if (rc < 0) return false;
    if (f > 0 && rc != 0) return false;
  }
  for (std::size_t v = 0; v < balance.size(); ++v) {
    if (balance[v] != inst.demand[v]) return false;
  }
  return true;
}

ApproxCertificate certify_approximate(const Problem& prob, std::span<const double> x,
                                      std::span<const double> y) {
  const Graph& g = prob.graph();
  require_size(x, g.edge_count(), "certificate flow");
  require_size(y, g.node_count(), "certificate potentials");
  ApproxCertificate cert;
  Vector ax = incidence_matvec(g, x);
  Vector aty = incidence_rmatvec(g, y);
  const auto b = prob.b();
  const auto c = g.cost();
  for (std::size_t v = 0; v < ax.size(); ++v) cert.primal_residual += std::abs(ax[v] - b[v]);
  double cx = 0.0;
  for (std::size_t e = 0; e < x.size(); ++e) {
    cert.negativity = std::max(cert.negativity, -x[e]);
    cert.dual_violation = std::max(cert.dual_violation, aty[e] - c[e]);
    cx += c[e] * x[e];
  }
  cert.gap = std::abs(cx - dot(b, y)) / std::max(1.0, std::abs(cx));
  return cert;
}

}  // namespace psipm
