#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cnm/common.hpp"
#include "cnm/motifs.hpp"
#include "cnm/simlab.hpp"
#include "cnm/tree.hpp"

namespace cnm {

/// Randomization design spec as given on the command line:
/// "bernoulli:p" or "cluster:path,p". The cluster file is CSV "node,cluster".
struct DesignSpec {
    enum class Kind : std::uint8_t { Bernoulli, Cluster } kind = Kind::Bernoulli;
    double p = 0.5;
    std::string cluster_path;

    static DesignSpec parse(const std::string& text);
    Design resolve(NodeId n) const;
    std::string describe() const;
};

struct AnalysisConfig {
    std::string graph_path;
    std::string assign_path;
    std::string outcome_path;
    DesignSpec design;
    std::string catalog = "full"; // full | dyad | dyad-triad
    MissingPolicy policy;
    HyperParams hyper;
    std::uint32_t R = 100;
    Seed seed = 1;
    std::string out_dir;
    bool direct_mode = false;
    bool log1p = false;            // y -> log10(y + 1)
    Quantization quant = Quantization::Fixed16;
    std::string tensor_cache;      // optional cache file (built when absent)
    std::string grid;              // optional grid-search spec, e.g. "gamma=0,1;eta=0"
    unsigned threads = 0;          // execution detail; never changes results
    NodeId n_nodes = 0;            // 0 = infer from input files
};

/// Observed-experiment pipeline: ingest, replicate tensor, honest tree,
/// reports. Writes report.json, tree.json, tree.dot into out_dir.
int cmd_analyze(const AnalysisConfig& cfg);

struct SimulateConfig {
    ExperimentConfig exp;
    std::uint32_t runs = 1;
    bool check = false;    // apply per-DGP recovery assertions to the exit code
    std::string out_dir;   // optional: per-run JSON reports
};

int cmd_simulate(const SimulateConfig& cfg);

/// Per-node motif dump: labeled/unlabeled counts plus the interference vector
/// in canonical column order.
int cmd_motifs(const std::string& graph_path, const std::string& assign_path,
               const std::string& out_path, const std::string& catalog = "full",
               unsigned threads = 0, NodeId n_nodes = 0);

/// One grid-search cell. CV score is the two-fold held-out weighted SSE on
/// the training half.
struct GridCell {
    HyperParams hyper;
    std::string label;
    double cv_wsse = 0.0;
};

struct GridOutcome {
    std::vector<GridCell> cells;
    std::size_t best = 0;
};

GridOutcome grid_search(const FeatureMatrix& F, const std::vector<double>& y,
                        const std::vector<std::uint32_t>& train_ids,
                        const ReplicateFeatures& repl, const HyperParams& base,
                        const std::string& spec, TreeMode mode, unsigned threads = 0);

} // namespace cnm
