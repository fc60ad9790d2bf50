#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cnm/assignment.hpp"
#include "cnm/common.hpp"
#include "cnm/estimators.hpp"
#include "cnm/exposure.hpp"
#include "cnm/graph.hpp"
#include "cnm/motifs.hpp"
#include "cnm/tree.hpp"

namespace cnm {

struct WSConfig {
    NodeId n = 0;
    NodeId k = 10;      // even ring degree, k < n
    double beta = 0.5;  // rewiring probability
    Seed seed = 0;
};

/// Watts-Strogatz small-world graph: ring lattice with k/2 neighbors on each
/// side, each edge independently rewired with probability beta to a uniform
/// non-duplicate, non-self target. Edge count is exactly n*k/2; connectivity
/// is not guaranteed.
Graph watts_strogatz(const WSConfig& cfg);

/// Number of connected components of the subgraph induced by `subset`
/// (which must be a subset of adj(i)); empty subset gives 0.
std::uint32_t structural_diversity(const Graph& g, NodeId i,
                                   const std::vector<NodeId>& subset);

enum class DgpKind : std::uint8_t {
    Cutoff = 0,                        // direct effect gated on 3c-2 > 0.7
    CausalStructuralDiversity = 1,     // effect scales with SD of treated alters
    CorrelationalStructuralDiversity = 2,
    NullEffect = 3,
};

const char* dgp_name(DgpKind k);
DgpKind parse_dgp(const std::string& name); // cutoff|causal-sd|corr-sd|null

struct DGPSpec {
    DgpKind kind = DgpKind::Cutoff;
    double noise_sigma = 1.0; // gaussian noise scale
};

/// Simulated outcomes, deterministic given (graph, z, seed). The gender
/// covariate is iid Bernoulli(0.5) and the noise stream is separate, so
/// noise_sigma = 0 keeps the same genders. A prebuilt census (any catalog
/// including closed triads) can be passed to avoid recomputation.
std::vector<double> generate_outcomes(const Graph& g, const AssignmentVector& z,
                                      const DGPSpec& spec, Seed seed,
                                      const MotifCensus* census = nullptr);

struct ExperimentConfig {
    NodeId n = 20000;         // desk scale; paper scale is 200000
    NodeId k = 10;
    double beta = 0.5;
    NodeId cluster_size = 10;
    double p = 0.5;
    std::uint32_t R = 100;
    DGPSpec dgp;
    MissingPolicy policy;
    HyperParams hyper;        // R and seeds resolved per run
    Seed seed = 1;
    bool paper_scale = false; // forces n = 200000
    Quantization quant = Quantization::Fixed16;
    unsigned threads = 0;     // execution detail; never changes results

    NodeId effective_n() const { return paper_scale ? 200000 : n; }
};

struct SplitInfo {
    std::string axis;
    double theta = 0.0;
};

struct ChildEffect {
    double value = 0.0;
    double std_error = 0.0;
    bool present = false;
};

struct ConditionSummary {
    std::string name;
    double fraction = 0.0; // share of retained observations observed in it
    bool has_estimate = false;
    Estimate estimate;
};

struct RunReport {
    ExperimentConfig config;
    std::uint64_t n_edges = 0;
    std::size_t n_retained_full = 0;
    std::size_t n_retained_dyad = 0;
    MissingReport missing_full;
    double truth_gate = 0.0;

    ExposureTree full_tree;
    ExposureTree dyad_tree;
    ExposureTree direct_tree;

    std::optional<SplitInfo> full_root_split;
    std::optional<SplitInfo> treated_first_split;       // full tree, Z>0 branch
    std::optional<SplitInfo> dyad_treated_first_split;  // dyad tree, Z>0 branch
    std::optional<SplitInfo> direct_root_split;
    ChildEffect direct_above;  // direct-tree child on the > side of the root split
    ChildEffect direct_below;  // <= side

    GateResult gate_full;
    GateResult gate_dyad;
    Estimate sutva;                              // difference in means, est half
    std::vector<ConditionSummary> aronow_samii;  // four-condition baseline

    bool positivity_ok = false;
    std::uint32_t positivity_violations = 0;
    bool has_significant_x_split = false; // any X split with honest gap > 2 SE

    std::string to_json() const;
    std::string to_table() const;
};

/// Full pipeline: WS graph, ring clusters, one observed draw, outcomes,
/// replicate tensor, honest trees (full-motif, dyad-only, direct-effect),
/// GATE / SUTVA / four-condition baselines, and positivity re-verification.
RunReport run_experiment(const ExperimentConfig& cfg);

/// True whenever some internal split on an interference axis has honest child
/// estimates differing by more than two combined standard errors.
bool significant_x_split(const ExposureTree& tree);

} // namespace cnm
