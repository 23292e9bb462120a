#include "mzbias/mesh_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mzbias {

MeshGraph::MeshGraph(int m, Architecture a) : m_(m), arch_(a) {
  if (m < 1) throw std::invalid_argument("build_graph: m must be positive");
  cells_ = mesh_layout(m, a);
  const int c = static_cast<int>(cells_.size());
  const int last = num_layers(m, a);
  nodes_.reserve(2 * m + c);
  for (int i = 0; i < m; ++i) nodes_.push_back({NodeKind::Input, i, -1});
  for (int k = 0; k < c; ++k) nodes_.push_back({NodeKind::Cell, cells_[k].mode, cells_[k].layer, k});
  for (int i = 0; i < m; ++i) nodes_.push_back({NodeKind::Output, i, last});

  succ_.assign(nodes_.size(), {});
  pred_.assign(nodes_.size(), {});
  auto link = [&](int from, int to) {
    succ_[from].push_back(to);
    pred_[to].push_back(from);
  };
  std::vector<int> head(m);
  std::iota(head.begin(), head.end(), 0);
  for (int k = 0; k < c; ++k) {
    const int mode = cells_[k].mode;
    const int id = cell_node(k);
    link(head[mode], id);
    link(head[mode + 1], id);
    head[mode] = head[mode + 1] = id;
  }
  for (int i = 0; i < m; ++i) link(head[i], output_node(i));
}

int MeshGraph::num_edges() const {
  int e = 0;
  for (const auto& s : succ_) e += static_cast<int>(s.size());
  return e;
}

int MeshGraph::cell_node(CellPosition pos) const {
  auto it = std::lower_bound(cells_.begin(), cells_.end(), pos);
  if (it == cells_.end() || *it != pos) {
    throw std::out_of_range("no cell at layer " + std::to_string(pos.layer) + ", mode " + std::to_string(pos.mode));
  }
  return cell_node(static_cast<int>(it - cells_.begin()));
}

std::vector<BigInt> path_counts_from(const MeshGraph& g, int source) {
  std::vector<BigInt> n(g.num_nodes());
  n[source] = 1;
  for (int v = source; v < g.num_nodes(); ++v)
    if (n[v] != 0)
      for (int s : g.successors(v)) n[s] += n[v];
  return n;
}

std::vector<BigInt> path_counts_to(const MeshGraph& g, int target) {
  std::vector<BigInt> n(g.num_nodes());
  n[target] = 1;
  for (int v = target; v >= 0; --v)
    if (n[v] != 0)
      for (int p : g.predecessors(v)) n[p] += n[v];
  return n;
}

std::vector<PathStats> path_stats_from(const MeshGraph& g, int in) {
  if (in < 0 || in >= g.m()) throw std::out_of_range("path_stats: mode index");
  // (number of paths, summed length) from the input to each node
  std::vector<BigInt> count(g.num_nodes()), length(g.num_nodes());
  count[g.input_node(in)] = 1;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (count[v] == 0) continue;
    for (int s : g.successors(v)) {
      count[s] += count[v];
      length[s] += length[v] + count[v];
    }
  }
  std::vector<PathStats> out;
  out.reserve(g.m());
  for (int i = 0; i < g.m(); ++i) {
    const int t = g.output_node(i);
    if (count[t] == 0) throw std::logic_error("path_stats: output unreachable from input");
    out.push_back({count[t], length[t], BigRational(length[t], count[t])});
  }
  return out;
}

PathStats path_stats(const MeshGraph& g, int out, int in) {
  if (out < 0 || out >= g.m()) throw std::out_of_range("path_stats: mode index");
  return path_stats_from(g, in)[out];
}

std::vector<NodeReach> reach_sets(const MeshGraph& g) {
  const int n = g.num_nodes(), m = g.m();
  std::vector<NodeReach> r(n, NodeReach{boost::dynamic_bitset<>(m), boost::dynamic_bitset<>(m)});
  for (int i = 0; i < m; ++i) r[g.input_node(i)].inputs.set(i);
  for (int v = 0; v < n; ++v)
    for (int s : g.successors(v)) r[s].inputs |= r[v].inputs;
  for (int i = 0; i < m; ++i) r[g.output_node(i)].outputs.set(i);
  for (int v = n - 1; v >= 0; --v)
    for (int p : g.predecessors(v)) r[p].outputs |= r[v].outputs;
  return r;
}

int sensitivity_index(const MeshGraph& g, int node) {
  if (g.node(node).kind != NodeKind::Cell) throw std::invalid_argument("sensitivity_index: not a cell node");
  const auto r = reach_sets(g);
  return static_cast<int>(r[node].inputs.count() + r[node].outputs.count()) + g.m() - 1;
}

namespace {

// Adds, for every node, <len^k> over the paths between `source` and the node
// (direction given by `forward`) into `sum` and bumps `reached`.
void accumulate_moments(const MeshGraph& g, int source, bool forward, double k, std::vector<double>& sum,
                        std::vector<int>& reached) {
  const int n = g.num_nodes();
  const int depth = num_layers(g.m(), g.architecture()) + 2;
  std::vector<double> hist(static_cast<std::size_t>(n) * depth, 0.0);
  auto h = [&](int v) { return hist.data() + static_cast<std::size_t>(v) * depth; };
  h(source)[0] = 1.0;
  auto relax = [&](int v, const std::vector<int>& next) {
    for (int s : next)
      for (int d = 0; d + 1 < depth; ++d) h(s)[d + 1] += h(v)[d];
  };
  if (forward) {
    for (int v = source; v < n; ++v) relax(v, g.successors(v));
  } else {
    for (int v = source; v >= 0; --v) relax(v, g.predecessors(v));
  }
  for (int v = 0; v < n; ++v) {
    if (g.node(v).kind != NodeKind::Cell) continue;
    double paths = 0.0, moment = 0.0;
    for (int d = 0; d < depth; ++d) {
      paths += h(v)[d];
      moment += h(v)[d] * std::pow(static_cast<double>(d), k);
    }
    if (paths > 0) {
      sum[v] += moment / paths;
      ++reached[v];
    }
  }
}

}  // namespace

std::vector<double> flow_all(const MeshGraph& g, double k) {
  if (!(k > 0)) throw std::invalid_argument("flow: k must be positive");
  const int n = g.num_nodes();
  std::vector<double> in_sum(n, 0.0), out_sum(n, 0.0);
  std::vector<int> in_reached(n, 0), out_reached(n, 0);
  for (int i = 0; i < g.m(); ++i) {
    accumulate_moments(g, g.input_node(i), true, k, in_sum, in_reached);
    accumulate_moments(g, g.output_node(i), false, k, out_sum, out_reached);
  }
  std::vector<double> phi(g.num_cells());
  for (int c = 0; c < g.num_cells(); ++c) {
    const int v = g.cell_node(c);
    phi[c] = std::sqrt(in_sum[v] / in_reached[v] * (out_sum[v] / out_reached[v]));
  }
  return phi;
}

double flow(const MeshGraph& g, int node, double k) {
  const auto& nd = g.node(node);
  if (nd.kind != NodeKind::Cell) throw std::invalid_argument("flow: not a cell node");
  return flow_all(g, k)[nd.cell];
}

std::string_view to_string(Centrality c) {
  switch (c) {
    case Centrality::Closeness: return "closeness";
    case Centrality::Betweenness: return "betweenness";
    case Centrality::Degree: return "degree";
    case Centrality::Eigenvector: return "eigenvector";
    case Centrality::Katz: return "katz";
    case Centrality::PageRank: return "pagerank";
  }
  return "?";
}

Centrality parse_centrality(std::string_view name) {
  for (auto c : {Centrality::Closeness, Centrality::Betweenness, Centrality::Degree, Centrality::Eigenvector,
                 Centrality::Katz, Centrality::PageRank})
    if (to_string(c) == name) return c;
  throw std::invalid_argument("unknown centrality '" + std::string(name) + "'");
}

namespace {

using Adjacency = std::vector<std::vector<int>>;

Adjacency simple_successors(const MeshGraph& g) {
  Adjacency a(g.num_nodes());
  for (int v = 0; v < g.num_nodes(); ++v) {
    a[v] = g.successors(v);
    std::sort(a[v].begin(), a[v].end());
    a[v].erase(std::unique(a[v].begin(), a[v].end()), a[v].end());
  }
  return a;
}

Adjacency undirected(const Adjacency& succ) {
  Adjacency a(succ.size());
  for (std::size_t v = 0; v < succ.size(); ++v)
    for (int s : succ[v]) {
      a[v].push_back(s);
      a[s].push_back(static_cast<int>(v));
    }
  return a;
}

std::vector<int> bfs_distances(const Adjacency& succ, int source) {
  std::vector<int> dist(succ.size(), -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int s : succ[v])
      if (dist[s] < 0) {
        dist[s] = dist[v] + 1;
        queue.push_back(s);
      }
  }
  return dist;
}

// Wasserman-Faust closeness on out-distances.
std::vector<double> closeness(const Adjacency& succ) {
  const int n = static_cast<int>(succ.size());
  std::vector<double> c(n, 0.0);
  for (int v = 0; v < n; ++v) {
    const auto d = bfs_distances(succ, v);
    long reached = 0, total = 0;
    for (int u = 0; u < n; ++u)
      if (u != v && d[u] > 0) {
        ++reached;
        total += d[u];
      }
    if (total > 0 && n > 1) c[v] = (static_cast<double>(reached) / (n - 1)) * (static_cast<double>(reached) / total);
  }
  return c;
}

// Brandes, unnormalized, directed.
std::vector<double> betweenness(const Adjacency& succ) {
  const int n = static_cast<int>(succ.size());
  std::vector<double> cb(n, 0.0);
  for (int s = 0; s < n; ++s) {
    std::vector<int> order;
    std::vector<std::vector<int>> pred(n);
    std::vector<double> sigma(n, 0.0), delta(n, 0.0);
    std::vector<int> dist(n, -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (int w : succ[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int w = *it;
      for (int v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  return cb;
}

Eigen::VectorXd multiply(const Adjacency& a, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for (std::size_t v = 0; v < a.size(); ++v)
    for (int u : a[v]) y(v) += x(u);
  return y;
}

// Dominant eigenpair of the shifted operator A + I; the shift removes the
// ±λ oscillation of bipartite graphs.
std::pair<double, Eigen::VectorXd> dominant(const Adjacency& a, const CentralityOptions& opt) {
  const Eigen::Index n = static_cast<Eigen::Index>(a.size());
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::VectorXd y = multiply(a, x) + x;
    y.normalize();
    const double change = (y - x).lpNorm<Eigen::Infinity>();
    x = y;
    if (change < opt.tolerance) return {x.dot(multiply(a, x)), x};
  }
  throw ConvergenceError("eigenvector centrality: no convergence after " + std::to_string(opt.max_iterations) +
                         " iterations");
}

std::vector<double> katz(const Adjacency& a, const CentralityOptions& opt) {
  const double lambda = dominant(a, opt).first;
  const double att = 1.0 / (2.0 * lambda);
  const Eigen::Index n = static_cast<Eigen::Index>(a.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::VectorXd y = att * multiply(a, x) + Eigen::VectorXd::Ones(n);
    const double change = (y - x).lpNorm<Eigen::Infinity>();
    x = y;
    if (change < opt.tolerance) {
      x.normalize();
      return {x.data(), x.data() + n};
    }
  }
  throw ConvergenceError("katz centrality: no convergence after " + std::to_string(opt.max_iterations) + " iterations");
}

std::vector<double> pagerank(const Adjacency& succ, const CentralityOptions& opt) {
  const int n = static_cast<int>(succ.size());
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    double dangling = 0.0;
    for (int v = 0; v < n; ++v) {
      if (succ[v].empty()) {
        dangling += x(v);
        continue;
      }
      const double share = x(v) / static_cast<double>(succ[v].size());
      for (int s : succ[v]) y(s) += share;
    }
    y = opt.damping * (y.array() + dangling / n).matrix();
    y.array() += (1.0 - opt.damping) / n;
    const double change = (y - x).lpNorm<1>();
    x = y;
    if (change < opt.tolerance) return {x.data(), x.data() + n};
  }
  throw ConvergenceError("pagerank: no convergence after " + std::to_string(opt.max_iterations) + " iterations");
}

}  // namespace

std::vector<double> centrality(const MeshGraph& g, Centrality measure, const CentralityOptions& opt) {
  const Adjacency succ = simple_successors(g);
  switch (measure) {
    case Centrality::Closeness: return closeness(succ);
    case Centrality::Betweenness: return betweenness(succ);
    case Centrality::Degree: {
      std::vector<double> d(g.num_nodes());
      for (int v = 0; v < g.num_nodes(); ++v)
        d[v] = static_cast<double>(g.successors(v).size() + g.predecessors(v).size());
      return d;
    }
    case Centrality::Eigenvector: {
      Eigen::VectorXd x = dominant(undirected(succ), opt).second;
      if (x.sum() < 0) x = -x;
      return {x.data(), x.data() + x.size()};
    }
    case Centrality::Katz: return katz(undirected(succ), opt);
    case Centrality::PageRank: return pagerank(succ, opt);
  }
  throw std::invalid_argument("centrality: unknown measure");
}

}  // namespace mzbias
