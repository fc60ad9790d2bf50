#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "cnm/common.hpp"

namespace cnm {

/// One realized treatment vector; z[i] in {0,1}, length = n_nodes.
using AssignmentVector = std::vector<std::uint8_t>;

struct IndependentBernoulli {
    double p = 0.5;
};

struct ClusterBernoulli {
    std::vector<ClusterId> cluster_of; // total map: one cluster id per node
    double p = 0.5;
};

/// Randomization design. Independent: z_i iid Bernoulli(p). Cluster: one
/// Bernoulli(p) per cluster, broadcast to members.
struct Design {
    std::variant<IndependentBernoulli, ClusterBernoulli> variant;

    static Design bernoulli(double p) { return {IndependentBernoulli{p}}; }
    static Design cluster(std::vector<ClusterId> cluster_of, double p) {
        return {ClusterBernoulli{std::move(cluster_of), p}};
    }

    double p() const;
    void validate(NodeId n) const;
};

/// One draw; deterministic given (design, n, seed).
AssignmentVector draw(const Design& design, NodeId n, Seed seed);

/// R independent draws under counter-derived substreams of `seed`; replicate
/// r is reproducible in isolation via draw_replicate(design, n, seed, r).
AssignmentVector draw_replicate(const Design& design, NodeId n, Seed seed,
                                std::uint32_t r);
std::vector<AssignmentVector> draw_replicates(const Design& design, NodeId n,
                                              std::uint32_t R, Seed seed);

/// node i -> cluster floor(i / size).
std::vector<ClusterId> ring_clusters(NodeId n, NodeId size);

/// CSV "node,z" (header required, z in {0,1}, every node covered once).
AssignmentVector load_assignment_csv(std::istream& in, NodeId n);
AssignmentVector load_assignment_csv_file(const std::string& path, NodeId n);

/// CSV "node,cluster" (header required, every node covered once).
std::vector<ClusterId> load_cluster_csv(std::istream& in, NodeId n);
std::vector<ClusterId> load_cluster_csv_file(const std::string& path, NodeId n);

/// CSV "node,y" (header required, finite values, every node covered once).
std::vector<double> load_outcome_csv(std::istream& in, NodeId n);
std::vector<double> load_outcome_csv_file(const std::string& path, NodeId n);

} // namespace cnm
