#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "cnm/common.hpp"

namespace cnm {

/// Immutable undirected pre-treatment network. Node ids are dense integers
/// 0..n_nodes-1; adjacency is stored CSR-style with every neighbor list
/// strictly ascending. Symmetric, no self-loops, no duplicate edges.
/// Safe to share across worker threads after construction.
class Graph {
public:
    /// Builds from an edge list. Duplicate edges and both orientations of the
    /// same pair collapse to one undirected edge. Rejects self-loops and ids
    /// outside [0, n_nodes).
    static Graph from_edges(NodeId n_nodes,
                            std::vector<std::pair<NodeId, NodeId>> edges);

    /// Parses whitespace-separated "u v" pairs, one edge per line. Lines that
    /// are blank or start with '#' are ignored. Errors carry the line number.
    static Graph load_edge_list(std::istream& in, NodeId n_nodes);
    static Graph load_edge_list_file(const std::string& path, NodeId n_nodes);

    NodeId n_nodes() const { return n_; }
    std::uint64_t n_edges() const { return adj_.size() / 2; }

    NodeId degree(NodeId i) const {
        check_node(i);
        return static_cast<NodeId>(offsets_[i + 1] - offsets_[i]);
    }

    std::span<const NodeId> neighbors(NodeId i) const {
        check_node(i);
        return {adj_.data() + offsets_[i], adj_.data() + offsets_[i + 1]};
    }

    bool has_edge(NodeId u, NodeId v) const;

    /// One line "u v" (u < v) per edge, ascending.
    void export_edge_list(std::ostream& out) const;

private:
    void check_node(NodeId i) const {
        if (i >= n_) fail("node id " + std::to_string(i) + " out of range (n=" +
                          std::to_string(n_) + ")");
    }

    NodeId n_ = 0;
    std::vector<std::uint64_t> offsets_;
    std::vector<NodeId> adj_;
};

/// One-hop ego network view: the ego, its alters, and the induced edges among
/// the alters (pairs stored with a < b, lexicographically ascending).
struct EgoView {
    NodeId ego = 0;
    std::vector<NodeId> alters;
    std::vector<std::pair<NodeId, NodeId>> alter_edges;
};

/// Induced-edge detection runs a sorted-list merge of adj(alter) against the
/// alter list, so the cost is O(sum of alter degrees) per ego.
EgoView ego_view(const Graph& g, NodeId i);

} // namespace cnm
