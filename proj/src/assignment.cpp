#include "cnm/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "cnm/rng.hpp"

namespace cnm {

double Design::p() const {
    return std::visit([](const auto& d) { return d.p; }, variant);
}

void Design::validate(NodeId n) const {
    const double prob = p();
    require(prob > 0.0 && prob < 1.0, "assignment probability must satisfy 0 < p < 1");
    if (const auto* cb = std::get_if<ClusterBernoulli>(&variant)) {
        if (cb->cluster_of.size() != n)
            fail("cluster map covers " + std::to_string(cb->cluster_of.size()) +
                 " nodes, expected " + std::to_string(n));
    }
}

AssignmentVector draw(const Design& design, NodeId n, Seed seed) {
    design.validate(n);
    Rng rng(seed);
    AssignmentVector z(n, 0);
    if (const auto* ib = std::get_if<IndependentBernoulli>(&design.variant)) {
        for (NodeId i = 0; i < n; ++i) z[i] = rng.bernoulli(ib->p) ? 1 : 0;
        return z;
    }
    const auto& cb = std::get<ClusterBernoulli>(design.variant);
    ClusterId max_cluster = 0;
    for (NodeId i = 0; i < n; ++i) max_cluster = std::max(max_cluster, cb.cluster_of[i]);
    std::vector<std::uint8_t> cluster_z(static_cast<std::size_t>(max_cluster) + 1);
    for (auto& c : cluster_z) c = rng.bernoulli(cb.p) ? 1 : 0;
    for (NodeId i = 0; i < n; ++i) z[i] = cluster_z[cb.cluster_of[i]];
    return z;
}

AssignmentVector draw_replicate(const Design& design, NodeId n, Seed seed,
                                std::uint32_t r) {
    return draw(design, n, derive_seed(seed, r));
}

std::vector<AssignmentVector> draw_replicates(const Design& design, NodeId n,
                                              std::uint32_t R, Seed seed) {
    require(R >= 1, "replicate count R must be >= 1");
    std::vector<AssignmentVector> out;
    out.reserve(R);
    for (std::uint32_t r = 0; r < R; ++r) out.push_back(draw_replicate(design, n, seed, r));
    return out;
}

std::vector<ClusterId> ring_clusters(NodeId n, NodeId size) {
    require(size >= 1, "cluster size must be >= 1");
    std::vector<ClusterId> map(n);
    for (NodeId i = 0; i < n; ++i) map[i] = i / size;
    return map;
}

namespace {

// Parses "a,b" CSV rows keyed by node id; enforces the expected header,
// full single coverage of 0..n-1, and per-line diagnostics.
template <typename T, typename ParseValue>
std::vector<T> load_node_csv(std::istream& in, NodeId n, const std::string& header,
                             ParseValue&& parse_value) {
    std::string line;
    if (!std::getline(in, line)) fail("empty file, expected header \"" + header + "\"");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header)
        fail("line 1: expected header \"" + header + "\", got \"" + line + "\"");
    std::vector<T> values(n);
    std::vector<std::uint8_t> seen(n, 0);
    std::uint64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            fail("line " + std::to_string(line_no) + ": expected \"node,value\": \"" + line + "\"");
        long long node = -1;
        try {
            node = std::stoll(line.substr(0, comma));
        } catch (...) {
            fail("line " + std::to_string(line_no) + ": bad node id: \"" + line + "\"");
        }
        if (node < 0 || node >= static_cast<long long>(n))
            fail("line " + std::to_string(line_no) + ": node id out of range (n=" +
                 std::to_string(n) + ")");
        if (seen[static_cast<NodeId>(node)])
            fail("line " + std::to_string(line_no) + ": duplicate node " + std::to_string(node));
        seen[static_cast<NodeId>(node)] = 1;
        values[static_cast<NodeId>(node)] =
            parse_value(line.substr(comma + 1), line_no);
    }
    for (NodeId i = 0; i < n; ++i)
        if (!seen[i]) fail("missing row for node " + std::to_string(i));
    return values;
}

template <typename Fn>
auto with_file(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) fail("cannot open file: " + path);
    try {
        return fn(in);
    } catch (const CnmError& e) {
        fail(path + ": " + e.what());
    }
}

} // namespace

AssignmentVector load_assignment_csv(std::istream& in, NodeId n) {
    return load_node_csv<std::uint8_t>(in, n, "node,z", [](const std::string& s, std::uint64_t ln) {
        if (s == "0") return std::uint8_t{0};
        if (s == "1") return std::uint8_t{1};
        fail("line " + std::to_string(ln) + ": z must be 0 or 1, got \"" + s + "\"");
    });
}

AssignmentVector load_assignment_csv_file(const std::string& path, NodeId n) {
    return with_file(path, [&](std::istream& in) { return load_assignment_csv(in, n); });
}

std::vector<ClusterId> load_cluster_csv(std::istream& in, NodeId n) {
    return load_node_csv<ClusterId>(in, n, "node,cluster", [](const std::string& s, std::uint64_t ln) {
        try {
            const long long c = std::stoll(s);
            if (c < 0) throw std::invalid_argument("negative");
            return static_cast<ClusterId>(c);
        } catch (...) {
            fail("line " + std::to_string(ln) + ": bad cluster id: \"" + s + "\"");
        }
    });
}

std::vector<ClusterId> load_cluster_csv_file(const std::string& path, NodeId n) {
    return with_file(path, [&](std::istream& in) { return load_cluster_csv(in, n); });
}

std::vector<double> load_outcome_csv(std::istream& in, NodeId n) {
    return load_node_csv<double>(in, n, "node,y", [](const std::string& s, std::uint64_t ln) {
        try {
            const double y = std::stod(s);
            if (!std::isfinite(y)) throw std::invalid_argument("not finite");
            return y;
        } catch (...) {
            fail("line " + std::to_string(ln) + ": bad outcome value: \"" + s + "\"");
        }
    });
}

std::vector<double> load_outcome_csv_file(const std::string& path, NodeId n) {
    return with_file(path, [&](std::istream& in) { return load_outcome_csv(in, n); });
}

} // namespace cnm
