#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cnm/common.hpp"
#include "cnm/estimators.hpp"
#include "cnm/exposure.hpp"
#include "cnm/motifs.hpp"

namespace cnm {

/// Hyper-parameters of the recursive partitioning algorithm.
struct HyperParams {
    double gamma = 0.0;       // minimum WSSE reduction for a split
    std::uint32_t kappa = 0;  // minimum training members per leaf; 0 = auto
    double delta = 0.01;      // positivity: allowed violating fraction
    double epsilon = -1.0;    // positivity: pi_hat threshold; <0 = auto
    std::uint32_t eta = 256;  // candidate-threshold subsample size; 0 = all
    double phi = 0.0;         // effective-weight band; 0 = disabled
    std::uint32_t R = 0;      // replicate count (filled in from the tensor)
    Seed seed = 0;            // threshold-subsample seed
    std::uint32_t max_depth = 12;

    /// Resolves auto values: kappa = max(100, 0.5% of the retained
    /// population), epsilon = 1/(R+1) + 1e-12.
    HyperParams resolved(std::uint64_t n_retained, std::uint32_t R_actual) const;
};

/// Potential-outcome trees partition [0,1]^{m+1} and estimate the average
/// potential outcome per node; direct-effect trees partition the interference
/// axes [0,1]^m only and estimate the treated-vs-control contrast with the
/// neighborhood condition held fixed.
enum class TreeMode : std::uint8_t { PotentialOutcomes = 0, DirectEffects = 1 };

struct TreeNode {
    std::uint32_t id = 0;
    std::int32_t parent = -1;
    std::int32_t left = -1;   // <= side; -1 for leaves
    std::int32_t right = -1;  // > side
    std::int32_t split_axis = -1;
    double theta = 0.0;
    std::uint16_t theta_code = 0;
    std::uint32_t depth = 0;
    Partition partition;

    std::uint32_t n_train = 0;
    double wsse_train = 0.0;

    // honest estimates (estimation half)
    std::uint32_t n_est = 0;
    bool has_estimate = false;
    double value = 0.0;
    double std_error = 0.0;
    double effective_weight = 0.0;

    std::int32_t leaf_index = -1; // d_{k+1} ordering over leaves, preorder

    bool is_leaf() const { return split_axis < 0; }
};

class ExposureTree {
public:
    TreeMode mode() const { return mode_; }
    const HyperParams& hyperparams() const { return hp_; }
    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(std::uint32_t id) const { return nodes_[id]; }
    const TreeNode& root() const { return nodes_.front(); }
    std::uint32_t n_leaves() const { return n_leaves_; }
    bool estimated() const { return estimated_; }

    std::vector<const TreeNode*> leaves() const;

    /// Deterministic routing: at each split, quantized row[axis] <= theta goes
    /// left. Returns the leaf node id.
    std::uint32_t assign_condition(const double* row) const;
    std::uint32_t assign_condition(const std::vector<double>& row) const;

    std::string to_json() const;
    static ExposureTree from_json(const std::string& text);
    std::string to_dot() const;

private:
    friend ExposureTree fit(const FeatureMatrix&, const std::vector<double>&,
                            const std::vector<std::uint32_t>&, const ReplicateFeatures&,
                            const HyperParams&, TreeMode, unsigned);
    friend void honest_estimate(ExposureTree&, const FeatureMatrix&,
                                const std::vector<double>&,
                                const std::vector<std::uint32_t>&,
                                const ReplicateFeatures&, unsigned);

    TreeMode mode_ = TreeMode::PotentialOutcomes;
    HyperParams hp_;
    std::vector<std::string> columns_;
    std::vector<TreeNode> nodes_;
    std::uint32_t n_leaves_ = 0;
    bool estimated_ = false;
};

/// Grows the tree on the training half only. `train_ids` are row indices into
/// F (which is aligned observation-for-observation with `repl`); positivity
/// is checked over the whole retained universe, i.e. every row of `repl`.
ExposureTree fit(const FeatureMatrix& F, const std::vector<double>& y,
                 const std::vector<std::uint32_t>& train_ids,
                 const ReplicateFeatures& repl, const HyperParams& params,
                 TreeMode mode = TreeMode::PotentialOutcomes, unsigned threads = 0);

/// Fills honest estimates into every node (not only leaves) from the
/// estimation half. Leaves without estimation members keep a missing
/// estimate and are reported as degenerate rather than re-merged.
void honest_estimate(ExposureTree& tree, const FeatureMatrix& F,
                     const std::vector<double>& y,
                     const std::vector<std::uint32_t>& est_ids,
                     const ReplicateFeatures& repl, unsigned threads = 0);

/// One split-search result, exposed for oracle testing: the admissible
/// (axis, theta) pair minimizing the weighted child-WSSE combination, with
/// ties broken by (objective, axis, theta).
struct SplitChoice {
    std::uint32_t axis = 0;
    std::uint16_t theta_code = 0;
    double theta = 0.0;
    double objective = 0.0;
};

/// Runs one split search at the root partition restricted to `member_ids`
/// (träining rows). Returns nullopt when no admissible split exists.
std::optional<SplitChoice> split_search(const FeatureMatrix& F,
                                        const std::vector<double>& y,
                                        const std::vector<std::uint32_t>& member_ids,
                                        const ReplicateFeatures& repl,
                                        const HyperParams& params,
                                        TreeMode mode = TreeMode::PotentialOutcomes,
                                        unsigned threads = 0);

struct GateResult {
    Estimate estimate;                 // value = y_hat(X1) - y_hat(X0)
    std::uint32_t leaf_treated = 0;    // leaf containing the all-treated corner
    std::uint32_t leaf_control = 0;    // leaf containing the all-control corner
    bool degenerate = false;           // a corner leaf had no estimation members
};

/// Global average treatment effect: routes the all-treated corner
/// (Z=1, fully treated fractions 1, rest 0) and the all-control corner down
/// the estimated tree and differences the two leaf estimates. The variance
/// sums the two leaf variances (independent-leaves approximation).
GateResult gate(const ExposureTree& tree);

/// Convenience wrapper: grows a direct-effect tree (partitioning only the
/// interference axes) and honest-estimates it.
ExposureTree direct_effect_tree(const FeatureMatrix& F, const std::vector<double>& y,
                                const std::vector<std::uint32_t>& train_ids,
                                const std::vector<std::uint32_t>& est_ids,
                                const ReplicateFeatures& repl, const HyperParams& params,
                                unsigned threads = 0);

struct LeafPositivity {
    std::uint32_t leaf_id = 0;
    PositivityResult result;
};

/// Post-hoc re-verification of the positivity constraint at every leaf over
/// the full retained population.
std::vector<LeafPositivity> verify_leaf_positivity(const ExposureTree& tree,
                                                   const ReplicateFeatures& repl,
                                                   unsigned threads = 0);

} // namespace cnm
