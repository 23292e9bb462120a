#pragma once

#include <map>
#include <string_view>
#include <vector>

#include <boost/dynamic_bitset.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "mzbias/unitary.hpp"

namespace mzbias {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

enum class NodeKind { Input, Cell, Output };

struct GraphNode {
  NodeKind kind;
  int mode;           ///< input/output mode, or the upper mode of a cell
  int layer;          ///< -1 for inputs, num_layers for outputs
  int cell = -1;      ///< index into MeshGraph::cells for Cell nodes
};

/// Directed acyclic graph of a mesh. One edge per waveguide segment; node ids
/// are topologically ordered: inputs [0, m), cells [m, m + C), outputs after.
class MeshGraph {
 public:
  MeshGraph(int m, Architecture a);

  int m() const { return m_; }
  Architecture architecture() const { return arch_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const;

  int input_node(int mode) const { return mode; }
  int output_node(int mode) const { return m_ + num_cells() + mode; }
  int cell_node(int cell) const { return m_ + cell; }
  /// Node id of the cell at `pos`; throws std::out_of_range if absent.
  int cell_node(CellPosition pos) const;

  const GraphNode& node(int id) const { return nodes_[id]; }
  const std::vector<CellPosition>& cells() const { return cells_; }
  const std::vector<int>& successors(int id) const { return succ_[id]; }
  const std::vector<int>& predecessors(int id) const { return pred_[id]; }

 private:
  int m_;
  Architecture arch_;
  std::vector<CellPosition> cells_;
  std::vector<GraphNode> nodes_;
  std::vector<std::vector<int>> succ_, pred_;
};

inline MeshGraph build_graph(int m, Architecture a) { return MeshGraph(m, a); }

/// Number of distinct paths from `source` to every node.
std::vector<BigInt> path_counts_from(const MeshGraph& g, int source);
/// Number of distinct paths from every node to `target`.
std::vector<BigInt> path_counts_to(const MeshGraph& g, int target);

struct PathStats {
  BigInt count;
  BigInt total_length;  ///< summed edge count over all paths
  BigRational mean_length;
};

/// Statistics of the paths from input mode `in` to output mode `out` (zero-based).
PathStats path_stats(const MeshGraph& g, int out, int in);
/// path_stats for every output mode of one input, in a single sweep.
std::vector<PathStats> path_stats_from(const MeshGraph& g, int in);

/// Input modes that reach `node` and output modes reachable from it.
struct NodeReach {
  boost::dynamic_bitset<> inputs;
  boost::dynamic_bitset<> outputs;
};
std::vector<NodeReach> reach_sets(const MeshGraph& g);

/// |I_n| + |O_n| + m - 1 for a cell node.
int sensitivity_index(const MeshGraph& g, int node);

/// Geometric mean of the input-side and output-side averages of <|path|^k>,
/// each averaged uniformly over the paths of every reaching boundary mode.
double flow(const MeshGraph& g, int node, double k);
/// flow() for every cell, in cell order. Shares the length histograms.
std::vector<double> flow_all(const MeshGraph& g, double k);

enum class Centrality { Closeness, Betweenness, Degree, Eigenvector, Katz, PageRank };
std::string_view to_string(Centrality c);
Centrality parse_centrality(std::string_view name);

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CentralityOptions {
  int max_iterations = 10000;
  double tolerance = 1e-8;
  double damping = 0.85;
};

/// One value per node id. Closeness, betweenness and PageRank follow edge
/// direction; eigenvector and Katz use the symmetrized adjacency because the
/// directed adjacency of a DAG is nilpotent.
std::vector<double> centrality(const MeshGraph& g, Centrality measure, const CentralityOptions& opt = {});

}  // namespace mzbias
