#include "cnm/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cnm {

Graph Graph::from_edges(NodeId n_nodes,
                        std::vector<std::pair<NodeId, NodeId>> edges) {
    for (auto& [u, v] : edges) {
        if (u >= n_nodes || v >= n_nodes)
            fail("edge (" + std::to_string(u) + "," + std::to_string(v) +
                 ") out of range (n=" + std::to_string(n_nodes) + ")");
        if (u == v) fail("self-loop at node " + std::to_string(u));
        if (u > v) std::swap(u, v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    Graph g;
    g.n_ = n_nodes;
    std::vector<std::uint64_t> deg(n_nodes + 1, 0);
    for (const auto& [u, v] : edges) {
        ++deg[u + 1];
        ++deg[v + 1];
    }
    g.offsets_.assign(n_nodes + 1, 0);
    for (NodeId i = 0; i < n_nodes; ++i) g.offsets_[i + 1] = g.offsets_[i] + deg[i + 1];
    g.adj_.resize(g.offsets_[n_nodes]);
    std::vector<std::uint64_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, v] : edges) {
        g.adj_[cursor[u]++] = v;
        g.adj_[cursor[v]++] = u;
    }
    // Sorted edge input plus two-sided fill keeps each list ascending already,
    // except for the v-side entries; sort per node to be safe.
    for (NodeId i = 0; i < n_nodes; ++i)
        std::sort(g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
                  g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));
    return g;
}

Graph Graph::load_edge_list(std::istream& in, NodeId n_nodes) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos || line[pos] == '#') continue;
        std::istringstream ls(line);
        long long u = -1, v = -1;
        if (!(ls >> u >> v))
            fail("line " + std::to_string(line_no) + ": malformed edge line: \"" + line + "\"");
        std::string trailing;
        if (ls >> trailing)
            fail("line " + std::to_string(line_no) + ": trailing content: \"" + line + "\"");
        if (u < 0 || v < 0 || u >= static_cast<long long>(n_nodes) ||
            v >= static_cast<long long>(n_nodes))
            fail("line " + std::to_string(line_no) + ": node id out of range (n=" +
                 std::to_string(n_nodes) + "): \"" + line + "\"");
        if (u == v)
            fail("line " + std::to_string(line_no) + ": self-loop at node " + std::to_string(u));
        edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
    return from_edges(n_nodes, std::move(edges));
}

Graph Graph::load_edge_list_file(const std::string& path, NodeId n_nodes) {
    std::ifstream in(path);
    if (!in) fail("cannot open edge list file: " + path);
    try {
        return load_edge_list(in, n_nodes);
    } catch (const CnmError& e) {
        fail(path + ": " + e.what());
    }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
    check_node(u);
    check_node(v);
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

void Graph::export_edge_list(std::ostream& out) const {
    for (NodeId u = 0; u < n_; ++u)
        for (NodeId v : neighbors(u))
            if (u < v) out << u << ' ' << v << '\n';
}

EgoView ego_view(const Graph& g, NodeId i) {
    const auto alters = g.neighbors(i);
    EgoView view;
    view.ego = i;
    view.alters.assign(alters.begin(), alters.end());
    for (NodeId a : view.alters) {
        // merge adj(a) against the (sorted) alter list, keeping pairs a < b
        const auto adj_a = g.neighbors(a);
        auto it = adj_a.begin();
        auto jt = std::upper_bound(view.alters.begin(), view.alters.end(), a);
        while (it != adj_a.end() && jt != view.alters.end()) {
            if (*it < *jt) {
                ++it;
            } else if (*jt < *it) {
                ++jt;
            } else {
                view.alter_edges.emplace_back(a, *jt);
                ++it;
                ++jt;
            }
        }
    }
    std::sort(view.alter_edges.begin(), view.alter_edges.end());
    return view;
}

} // namespace cnm
