#include "cnm/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "cnm/parallel.hpp"
#include "cnm/rng.hpp"

namespace cnm {

using json = nlohmann::ordered_json;

HyperParams HyperParams::resolved(std::uint64_t n_retained, std::uint32_t R_actual) const {
    HyperParams hp = *this;
    hp.R = R_actual;
    if (hp.kappa == 0)
        hp.kappa = static_cast<std::uint32_t>(std::max<std::uint64_t>(
            100, static_cast<std::uint64_t>(std::ceil(0.005 * static_cast<double>(n_retained)))));
    if (hp.epsilon < 0.0) hp.epsilon = default_epsilon(R_actual);
    require(hp.gamma >= 0.0, "gamma must be >= 0");
    require(hp.kappa >= 1, "kappa must be >= 1");
    require(hp.delta >= 0.0 && hp.delta < 1.0, "delta must be in [0,1)");
    require(hp.epsilon >= 0.0 && hp.epsilon < 1.0, "epsilon must be in [0,1)");
    require(hp.phi >= 0.0, "phi must be >= 0");
    require(hp.max_depth >= 1, "max_depth must be >= 1");
    return hp;
}

namespace {

/// Per-node working set: training members plus, for every retained
/// observation, the replicate rows still inside the node partition. A
/// replicate leaves the survivor list at most once per added constraint, so
/// descending the tree never rescans the full tensor.
struct NodeWork {
    std::vector<std::uint32_t> members;
    std::vector<std::uint64_t> surv_off;
    std::vector<std::uint16_t> surv;
    Partition partition;
    double wsse = 0.0;
    std::uint32_t depth = 0;
};

struct FitContext {
    const FeatureMatrix& F;
    const std::vector<double>& y;
    const ReplicateFeatures& repl;
    HyperParams hp;
    TreeMode mode;
    unsigned threads = 1;
    std::uint32_t n_obs = 0;
    std::uint32_t n_cols = 0;
    std::uint32_t R = 0;
    std::int64_t cstar = -1;        // max survivor count with pi_hat <= eps
    double delta_cap = 0.0;         // delta * |universe|
    std::uint64_t n_train_universe = 0;
    std::vector<std::uint16_t> qF;  // quantized observed rows
    std::vector<std::uint8_t> zobs; // observed z per row
    std::vector<std::uint8_t> member_mask;

    std::uint16_t qf(std::uint32_t i, std::uint32_t c) const {
        return qF[static_cast<std::size_t>(i) * n_cols + c];
    }
};

bool violates(std::uint32_t hits, std::int64_t cstar) {
    return static_cast<std::int64_t>(hits) <= cstar;
}

/// Largest hit count still flagged by pi_hat <= eps, using the same floating
/// comparison as the generic positivity path.
std::int64_t compute_cstar(std::uint32_t R, double eps) {
    const double denom = R + 1.0;
    std::int64_t cstar = -1;
    for (std::uint32_t c = 0; c <= R; ++c) {
        if ((c + 1.0) / denom <= eps)
            cstar = c;
        else
            break;
    }
    return cstar;
}

double one_pass_wsse(double sw, double swy, double swy2) {
    return sw > 0.0 ? swy2 - swy * swy / sw : 0.0;
}

/// Training WSSE of a node with its own inclusion probabilities. In
/// direct-effect mode the fit is constant+Z, which for a binary regressor is
/// a separate weighted mean per treatment group.
double node_wsse(const FitContext& ctx, const NodeWork& work) {
    const double r1 = ctx.R + 1.0;
    if (ctx.mode == TreeMode::PotentialOutcomes) {
        double sw = 0, swy = 0, swy2 = 0;
        for (std::uint32_t i : work.members) {
            const double s = static_cast<double>(work.surv_off[i + 1] - work.surv_off[i]);
            const double w = r1 / (s + 1.0);
            const double yi = ctx.y[i];
            sw += w;
            swy += w * yi;
            swy2 += w * yi * yi;
        }
        return one_pass_wsse(sw, swy, swy2);
    }
    double sw1 = 0, swy1 = 0, swy21 = 0, sw0 = 0, swy0 = 0, swy20 = 0;
    for (std::uint32_t i : work.members) {
        std::uint32_t s1 = 0, s0 = 0;
        for (std::uint64_t idx = work.surv_off[i]; idx < work.surv_off[i + 1]; ++idx) {
            if (ctx.repl.code(i, work.surv[idx], 0) != 0)
                ++s1;
            else
                ++s0;
        }
        const double yi = ctx.y[i];
        if (ctx.zobs[i]) {
            const double w = r1 / (s1 + 1.0);
            sw1 += w;
            swy1 += w * yi;
            swy21 += w * yi * yi;
        } else {
            const double w = r1 / (s0 + 1.0);
            sw0 += w;
            swy0 += w * yi;
            swy20 += w * yi * yi;
        }
    }
    return one_pass_wsse(sw1, swy1, swy21) + one_pass_wsse(sw0, swy0, swy20);
}

struct AxisBest {
    bool found = false;
    double objective = 0.0;
    std::uint16_t code = 0;
};

/// Evaluates every candidate threshold on one axis in a single sweep over all
/// retained observations. For each observation the survivor rows are bucketed
/// against the sorted candidates once; cumulative counts then give, for every
/// threshold simultaneously, the child inclusion probabilities (positivity
/// over the full universe) and the member weights for the child WSSEs.
AxisBest evaluate_axis(const FitContext& ctx, const NodeWork& node,
                       std::uint32_t axis, const std::vector<std::uint16_t>& cand) {
    const std::size_t K = cand.size();
    if (K == 0) return {};
    const bool direct = ctx.mode == TreeMode::DirectEffects;
    const double r1 = ctx.R + 1.0;

    std::vector<std::uint64_t> posL1(K, 0), posR1(K, 0), posL0, posR0;
    std::vector<std::uint32_t> nL(K, 0), nR(K, 0);
    std::vector<std::uint32_t> nL1, nL0, nR1, nR0;
    std::vector<double> swL1(K, 0), swyL1(K, 0), swy2L1(K, 0);
    std::vector<double> swR1(K, 0), swyR1(K, 0), swy2R1(K, 0);
    std::vector<double> swL0, swyL0, swy2L0, swR0, swyR0, swy2R0;
    if (direct) {
        posL0.assign(K, 0);
        posR0.assign(K, 0);
        nL1.assign(K, 0);
        nL0.assign(K, 0);
        nR1.assign(K, 0);
        nR0.assign(K, 0);
        swL0.assign(K, 0);
        swyL0.assign(K, 0);
        swy2L0.assign(K, 0);
        swR0.assign(K, 0);
        swyR0.assign(K, 0);
        swy2R0.assign(K, 0);
    }

    std::vector<std::uint32_t> hist1(K + 1), hist0(direct ? K + 1 : 0);

    for (std::uint32_t i = 0; i < ctx.n_obs; ++i) {
        std::fill(hist1.begin(), hist1.end(), 0u);
        if (direct) std::fill(hist0.begin(), hist0.end(), 0u);
        std::uint32_t s1 = 0, s0 = 0;
        for (std::uint64_t idx = node.surv_off[i]; idx < node.surv_off[i + 1]; ++idx) {
            const std::uint16_t r = node.surv[idx];
            const std::uint16_t code = ctx.repl.code(i, r, axis);
            const std::size_t pos = static_cast<std::size_t>(
                std::lower_bound(cand.begin(), cand.end(), code) - cand.begin());
            if (direct && ctx.repl.code(i, r, 0) == 0) {
                ++hist0[pos];
                ++s0;
            } else {
                ++hist1[pos];
                ++s1;
            }
        }
        const bool is_member = ctx.member_mask[i] != 0;
        std::size_t pos_obs = 0;
        double yi = 0.0;
        bool zi = false;
        if (is_member) {
            const std::uint16_t oc = ctx.qf(i, axis);
            pos_obs = static_cast<std::size_t>(
                std::lower_bound(cand.begin(), cand.end(), oc) - cand.begin());
            yi = ctx.y[i];
            zi = ctx.zobs[i] != 0;
        }
        std::uint32_t cl1 = 0, cl0 = 0;
        for (std::size_t k = 0; k < K; ++k) {
            cl1 += hist1[k];
            if (direct) cl0 += hist0[k];
            if (!direct) {
                posL1[k] += violates(cl1, ctx.cstar) ? 1 : 0;
                posR1[k] += violates(s1 - cl1, ctx.cstar) ? 1 : 0;
                if (is_member) {
                    const double yy = yi * yi;
                    if (k >= pos_obs) {
                        const double w = r1 / (cl1 + 1.0);
                        ++nL[k];
                        swL1[k] += w;
                        swyL1[k] += w * yi;
                        swy2L1[k] += w * yy;
                    } else {
                        const double w = r1 / (s1 - cl1 + 1.0);
                        ++nR[k];
                        swR1[k] += w;
                        swyR1[k] += w * yi;
                        swy2R1[k] += w * yy;
                    }
                }
            } else {
                posL1[k] += violates(cl1, ctx.cstar) ? 1 : 0;
                posL0[k] += violates(cl0, ctx.cstar) ? 1 : 0;
                posR1[k] += violates(s1 - cl1, ctx.cstar) ? 1 : 0;
                posR0[k] += violates(s0 - cl0, ctx.cstar) ? 1 : 0;
                if (is_member) {
                    const double yy = yi * yi;
                    if (k >= pos_obs) {
                        ++nL[k];
                        if (zi) {
                            const double w = r1 / (cl1 + 1.0);
                            ++nL1[k];
                            swL1[k] += w;
                            swyL1[k] += w * yi;
                            swy2L1[k] += w * yy;
                        } else {
                            const double w = r1 / (cl0 + 1.0);
                            ++nL0[k];
                            swL0[k] += w;
                            swyL0[k] += w * yi;
                            swy2L0[k] += w * yy;
                        }
                    } else {
                        ++nR[k];
                        if (zi) {
                            const double w = r1 / (s1 - cl1 + 1.0);
                            ++nR1[k];
                            swR1[k] += w;
                            swyR1[k] += w * yi;
                            swy2R1[k] += w * yy;
                        } else {
                            const double w = r1 / (s0 - cl0 + 1.0);
                            ++nR0[k];
                            swR0[k] += w;
                            swyR0[k] += w * yi;
                            swy2R0[k] += w * yy;
                        }
                    }
                }
            }
        }
    }

    AxisBest best;
    const double limit = node.wsse - ctx.hp.gamma;
    const double n_node = static_cast<double>(node.members.size());
    for (std::size_t k = 0; k < K; ++k) {
        if (nL[k] < ctx.hp.kappa || nR[k] < ctx.hp.kappa) continue;
        if (static_cast<double>(posL1[k]) > ctx.delta_cap ||
            static_cast<double>(posR1[k]) > ctx.delta_cap)
            continue;
        double wl, wr;
        if (!direct) {
            wl = one_pass_wsse(swL1[k], swyL1[k], swy2L1[k]);
            wr = one_pass_wsse(swR1[k], swyR1[k], swy2R1[k]);
            if (ctx.hp.phi > 0.0) {
                const double lo = (1.0 - ctx.hp.phi) * static_cast<double>(ctx.n_train_universe);
                const double hi = (1.0 + ctx.hp.phi) * static_cast<double>(ctx.n_train_universe);
                if (swL1[k] < lo || swL1[k] > hi || swR1[k] < lo || swR1[k] > hi) continue;
            }
        } else {
            if (nL1[k] == 0 || nL0[k] == 0 || nR1[k] == 0 || nR0[k] == 0) continue;
            if (static_cast<double>(posL0[k]) > ctx.delta_cap ||
                static_cast<double>(posR0[k]) > ctx.delta_cap)
                continue;
            wl = one_pass_wsse(swL1[k], swyL1[k], swy2L1[k]) +
                 one_pass_wsse(swL0[k], swyL0[k], swy2L0[k]);
            wr = one_pass_wsse(swR1[k], swyR1[k], swy2R1[k]) +
                 one_pass_wsse(swR0[k], swyR0[k], swy2R0[k]);
        }
        const double objective =
            (static_cast<double>(nL[k]) * wl + static_cast<double>(nR[k]) * wr) / n_node;
        if (!(objective < limit)) continue;
        if (!best.found || objective < best.objective) {
            best.found = true;
            best.objective = objective;
            best.code = cand[k];
        }
    }
    return best;
}

std::vector<std::uint16_t> axis_candidates(const FitContext& ctx, std::uint32_t axis,
                                           const std::vector<std::uint32_t>& cand_members) {
    if (axis == 0 && ctx.mode == TreeMode::PotentialOutcomes)
        return {0}; // binary column: the single split control <= 0 < treated
    std::vector<std::uint16_t> codes;
    codes.reserve(cand_members.size());
    for (std::uint32_t m : cand_members) codes.push_back(ctx.qf(m, axis));
    std::sort(codes.begin(), codes.end());
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    return codes;
}

struct BestSplit {
    std::uint32_t axis = 0;
    std::uint16_t code = 0;
    double objective = 0.0;
};

std::optional<BestSplit> search_node(FitContext& ctx, const NodeWork& node,
                                     std::uint64_t node_counter) {
    if (node.members.size() < 2ull * ctx.hp.kappa) return std::nullopt;

    // threshold subsample: eta members chosen once per node, shared by axes
    std::vector<std::uint32_t> cand_members = node.members;
    if (ctx.hp.eta > 0 && cand_members.size() > ctx.hp.eta) {
        Rng rng(derive_seed(ctx.hp.seed, node_counter));
        for (std::uint32_t i = 0; i < ctx.hp.eta; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(cand_members.size() - i));
            std::swap(cand_members[i], cand_members[j]);
        }
        cand_members.resize(ctx.hp.eta);
    }

    for (std::uint32_t m : node.members) ctx.member_mask[m] = 1;

    const std::uint32_t axis_lo = ctx.mode == TreeMode::DirectEffects ? 1 : 0;
    std::vector<AxisBest> results(ctx.n_cols);
    parallel_indices(ctx.n_cols - axis_lo, ctx.threads, [&](std::size_t t) {
        const std::uint32_t axis = axis_lo + static_cast<std::uint32_t>(t);
        results[axis] = evaluate_axis(ctx, node, axis, axis_candidates(ctx, axis, cand_members));
    });

    for (std::uint32_t m : node.members) ctx.member_mask[m] = 0;

    std::optional<BestSplit> best;
    for (std::uint32_t axis = axis_lo; axis < ctx.n_cols; ++axis) {
        const AxisBest& ab = results[axis];
        if (!ab.found) continue;
        if (!best || ab.objective < best->objective ||
            (ab.objective == best->objective &&
             (axis < best->axis || (axis == best->axis && ab.code < best->code))))
            best = BestSplit{axis, ab.code, ab.objective};
    }
    return best;
}

void make_children(const FitContext& ctx, NodeWork& node, const BestSplit& split,
                   NodeWork& left, NodeWork& right) {
    const double theta = dequantize16(split.code);
    left.partition = node.partition;
    left.partition.add(split.axis, theta, true);
    right.partition = node.partition;
    right.partition.add(split.axis, theta, false);
    left.depth = right.depth = node.depth + 1;

    for (std::uint32_t m : node.members) {
        if (ctx.qf(m, split.axis) <= split.code)
            left.members.push_back(m);
        else
            right.members.push_back(m);
    }
    left.surv_off.assign(ctx.n_obs + 1, 0);
    right.surv_off.assign(ctx.n_obs + 1, 0);
    left.surv.reserve(node.surv.size() / 2);
    right.surv.reserve(node.surv.size() / 2);
    for (std::uint32_t i = 0; i < ctx.n_obs; ++i) {
        for (std::uint64_t idx = node.surv_off[i]; idx < node.surv_off[i + 1]; ++idx) {
            const std::uint16_t r = node.surv[idx];
            if (ctx.repl.code(i, r, split.axis) <= split.code)
                left.surv.push_back(r);
            else
                right.surv.push_back(r);
        }
        left.surv_off[i + 1] = left.surv.size();
        right.surv_off[i + 1] = right.surv.size();
    }
    node.surv.clear();
    node.surv.shrink_to_fit();
    node.members.clear();
    node.members.shrink_to_fit();

    left.wsse = node_wsse(ctx, left);
    right.wsse = node_wsse(ctx, right);
}

std::uint32_t build_node(FitContext& ctx, std::vector<TreeNode>& nodes, NodeWork work,
                         std::int32_t parent) {
    const std::uint32_t id = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[id].id = id;
    nodes[id].parent = parent;
    nodes[id].depth = work.depth;
    nodes[id].partition = work.partition;
    nodes[id].n_train = static_cast<std::uint32_t>(work.members.size());
    nodes[id].wsse_train = work.wsse;

    if (work.depth < ctx.hp.max_depth) {
        if (auto split = search_node(ctx, work, id)) {
            NodeWork left, right;
            make_children(ctx, work, *split, left, right);
            nodes[id].split_axis = static_cast<std::int32_t>(split->axis);
            nodes[id].theta = dequantize16(split->code);
            nodes[id].theta_code = split->code;
            const std::uint32_t lid = build_node(ctx, nodes, std::move(left), static_cast<std::int32_t>(id));
            nodes[id].left = static_cast<std::int32_t>(lid);
            const std::uint32_t rid = build_node(ctx, nodes, std::move(right), static_cast<std::int32_t>(id));
            nodes[id].right = static_cast<std::int32_t>(rid);
        }
    }
    return id;
}

} // namespace

ExposureTree fit(const FeatureMatrix& F, const std::vector<double>& y,
                 const std::vector<std::uint32_t>& train_ids,
                 const ReplicateFeatures& repl, const HyperParams& params,
                 TreeMode mode, unsigned threads) {
    require(F.n_rows() > 0, "tree fit: zero observations");
    require(!train_ids.empty(), "tree fit: zero training observations");
    require(F.n_rows() == repl.n_obs(), "tree fit: feature matrix and tensor misaligned");
    require(y.size() == F.n_rows(), "tree fit: outcome vector misaligned");
    require(F.columns == repl.columns(), "tree fit: column sets differ");
    require(repl.n_replicates() <= 65535, "tree fit: R must fit 16 bits");
    if (mode == TreeMode::DirectEffects)
        require(F.n_cols() >= 2, "direct-effect tree needs at least one interference axis");
    for (std::size_t k = 0; k < train_ids.size(); ++k) {
        require(train_ids[k] < F.n_rows(), "tree fit: training id out of range");
        if (k > 0) require(train_ids[k - 1] < train_ids[k], "tree fit: training ids must ascend");
    }

    FitContext ctx{F, y, repl,
                   params.resolved(F.n_rows(), repl.n_replicates()),
                   mode,
                   resolve_threads(threads)};
    ctx.n_obs = static_cast<std::uint32_t>(F.n_rows());
    ctx.n_cols = static_cast<std::uint32_t>(F.n_cols());
    ctx.R = repl.n_replicates();
    ctx.cstar = compute_cstar(ctx.R, ctx.hp.epsilon);
    ctx.delta_cap = ctx.hp.delta * static_cast<double>(ctx.n_obs);
    ctx.n_train_universe = train_ids.size();
    ctx.qF.resize(static_cast<std::size_t>(ctx.n_obs) * ctx.n_cols);
    ctx.zobs.resize(ctx.n_obs);
    for (std::uint32_t i = 0; i < ctx.n_obs; ++i) {
        for (std::uint32_t c = 0; c < ctx.n_cols; ++c)
            ctx.qF[static_cast<std::size_t>(i) * ctx.n_cols + c] = quantize16(F.at(i, c));
        ctx.zobs[i] = F.at(i, 0) > 0.5 ? 1 : 0;
    }
    ctx.member_mask.assign(ctx.n_obs, 0);

    NodeWork root;
    root.members = train_ids;
    root.surv_off.resize(ctx.n_obs + 1);
    root.surv.resize(static_cast<std::size_t>(ctx.n_obs) * ctx.R);
    for (std::uint32_t i = 0; i < ctx.n_obs; ++i) {
        root.surv_off[i] = static_cast<std::uint64_t>(i) * ctx.R;
        for (std::uint32_t r = 0; r < ctx.R; ++r)
            root.surv[static_cast<std::size_t>(i) * ctx.R + r] = static_cast<std::uint16_t>(r);
    }
    root.surv_off[ctx.n_obs] = static_cast<std::uint64_t>(ctx.n_obs) * ctx.R;
    root.wsse = node_wsse(ctx, root);

    ExposureTree tree;
    tree.mode_ = mode;
    tree.hp_ = ctx.hp;
    tree.columns_ = F.columns;
    build_node(ctx, tree.nodes_, std::move(root), -1);

    std::int32_t leaf_counter = 0;
    for (auto& n : tree.nodes_)
        if (n.is_leaf()) n.leaf_index = leaf_counter++;
    tree.n_leaves_ = static_cast<std::uint32_t>(leaf_counter);
    return tree;
}

std::optional<SplitChoice> split_search(const FeatureMatrix& F,
                                        const std::vector<double>& y,
                                        const std::vector<std::uint32_t>& member_ids,
                                        const ReplicateFeatures& repl,
                                        const HyperParams& params, TreeMode mode,
                                        unsigned threads) {
    require(!member_ids.empty(), "split search: no members");
    FitContext ctx{F, y, repl, params.resolved(F.n_rows(), repl.n_replicates()), mode,
                   resolve_threads(threads)};
    ctx.n_obs = static_cast<std::uint32_t>(F.n_rows());
    ctx.n_cols = static_cast<std::uint32_t>(F.n_cols());
    ctx.R = repl.n_replicates();
    ctx.cstar = compute_cstar(ctx.R, ctx.hp.epsilon);
    ctx.delta_cap = ctx.hp.delta * static_cast<double>(ctx.n_obs);
    ctx.n_train_universe = member_ids.size();
    ctx.qF.resize(static_cast<std::size_t>(ctx.n_obs) * ctx.n_cols);
    ctx.zobs.resize(ctx.n_obs);
    for (std::uint32_t i = 0; i < ctx.n_obs; ++i) {
        for (std::uint32_t c = 0; c < ctx.n_cols; ++c)
            ctx.qF[static_cast<std::size_t>(i) * ctx.n_cols + c] = quantize16(F.at(i, c));
        ctx.zobs[i] = F.at(i, 0) > 0.5 ? 1 : 0;
    }
    ctx.member_mask.assign(ctx.n_obs, 0);

    NodeWork root;
    root.members = member_ids;
    root.surv_off.resize(ctx.n_obs + 1);
    root.surv.resize(static_cast<std::size_t>(ctx.n_obs) * ctx.R);
    for (std::uint32_t i = 0; i < ctx.n_obs; ++i) {
        root.surv_off[i] = static_cast<std::uint64_t>(i) * ctx.R;
        for (std::uint32_t r = 0; r < ctx.R; ++r)
            root.surv[static_cast<std::size_t>(i) * ctx.R + r] = static_cast<std::uint16_t>(r);
    }
    root.surv_off[ctx.n_obs] = static_cast<std::uint64_t>(ctx.n_obs) * ctx.R;
    root.wsse = node_wsse(ctx, root);

    auto best = search_node(ctx, root, 0);
    if (!best) return std::nullopt;
    return SplitChoice{best->axis, best->code, dequantize16(best->code), best->objective};
}

namespace {

struct EstWork {
    std::vector<std::uint32_t> members;   // F-row ids
    std::vector<std::uint64_t> off;       // per member position
    std::vector<std::uint16_t> surv;
};

void estimate_node(ExposureTree& tree, std::vector<TreeNode>& nodes, std::uint32_t id,
                   EstWork work, const FeatureMatrix& F, const std::vector<double>& y,
                   const ReplicateFeatures& repl) {
    TreeNode& n = nodes[id];
    n.n_est = static_cast<std::uint32_t>(work.members.size());
    n.has_estimate = false;
    const double r1 = repl.n_replicates() + 1.0;

    if (!work.members.empty()) {
        if (tree.mode() == TreeMode::PotentialOutcomes) {
            std::vector<double> pi(work.members.size());
            std::vector<std::uint32_t> local(work.members.size());
            std::vector<double> ym(work.members.size());
            for (std::size_t k = 0; k < work.members.size(); ++k) {
                const double s = static_cast<double>(work.off[k + 1] - work.off[k]);
                pi[k] = (s + 1.0) / r1;
                local[k] = static_cast<std::uint32_t>(k);
                ym[k] = y[work.members[k]];
            }
            const Estimate est = hajek(ym, local, pi);
            n.value = est.value;
            n.std_error = est.std_error;
            n.effective_weight = est.effective_weight;
            n.has_estimate = true;
        } else {
            std::vector<double> weights(work.members.size());
            std::vector<std::uint8_t> zloc(work.members.size());
            std::vector<std::uint32_t> local(work.members.size());
            std::vector<double> ym(work.members.size());
            bool any1 = false, any0 = false;
            for (std::size_t k = 0; k < work.members.size(); ++k) {
                const std::uint32_t i = work.members[k];
                const bool zi = F.at(i, 0) > 0.5;
                std::uint32_t s_own = 0;
                for (std::uint64_t idx = work.off[k]; idx < work.off[k + 1]; ++idx) {
                    const bool zr = repl.code(i, work.surv[idx], 0) != 0;
                    if (zr == zi) ++s_own;
                }
                weights[k] = r1 / (s_own + 1.0);
                zloc[k] = zi ? 1 : 0;
                local[k] = static_cast<std::uint32_t>(k);
                ym[k] = y[i];
                (zi ? any1 : any0) = true;
            }
            if (any1 && any0) {
                const WlsFit wls =
                    weighted_ls(ym, zloc, local, weights, Regressors::ConstantAndZ);
                n.value = wls.coef[1];
                n.std_error = wls.hc0_se[1];
                double sw = 0;
                for (double w : weights) sw += w;
                n.effective_weight = sw;
                n.has_estimate = true;
            }
        }
    }

    if (n.is_leaf()) return;
    const std::uint32_t axis = static_cast<std::uint32_t>(n.split_axis);
    const std::uint16_t code = n.theta_code;
    // a member follows its observed row; its surviving replicate rows are the
    // ones that land on the same side
    EstWork lw, rw;
    lw.off.push_back(0);
    rw.off.push_back(0);
    for (std::size_t k = 0; k < work.members.size(); ++k) {
        const std::uint32_t i = work.members[k];
        const bool goes_left = quantize16(F.at(i, axis)) <= code;
        EstWork& dst = goes_left ? lw : rw;
        dst.members.push_back(i);
        for (std::uint64_t idx = work.off[k]; idx < work.off[k + 1]; ++idx) {
            const std::uint16_t r = work.surv[idx];
            const bool r_left = repl.code(i, r, axis) <= code;
            if (r_left == goes_left) dst.surv.push_back(r);
        }
        dst.off.push_back(dst.surv.size());
    }
    work = EstWork{};
    estimate_node(tree, nodes, static_cast<std::uint32_t>(n.left), std::move(lw), F, y, repl);
    estimate_node(tree, nodes, static_cast<std::uint32_t>(n.right), std::move(rw), F, y, repl);
}

} // namespace

void honest_estimate(ExposureTree& tree, const FeatureMatrix& F,
                     const std::vector<double>& y,
                     const std::vector<std::uint32_t>& est_ids,
                     const ReplicateFeatures& repl, unsigned threads) {
    (void)threads;
    require(F.n_rows() == repl.n_obs(), "honest estimate: feature matrix and tensor misaligned");
    require(y.size() == F.n_rows(), "honest estimate: outcome vector misaligned");
    require(F.columns == tree.columns(), "honest estimate: column sets differ");
    for (std::uint32_t i : est_ids)
        require(i < F.n_rows(), "honest estimate: estimation id out of range");

    EstWork root;
    root.members = est_ids;
    root.off.resize(est_ids.size() + 1);
    root.surv.resize(est_ids.size() * static_cast<std::size_t>(repl.n_replicates()));
    const std::uint32_t R = repl.n_replicates();
    for (std::size_t k = 0; k < est_ids.size(); ++k) {
        root.off[k] = k * R;
        for (std::uint32_t r = 0; r < R; ++r)
            root.surv[k * R + r] = static_cast<std::uint16_t>(r);
    }
    root.off[est_ids.size()] = est_ids.size() * static_cast<std::size_t>(R);
    estimate_node(tree, tree.nodes_, 0, std::move(root), F, y, repl);
    tree.estimated_ = true;
}

std::vector<const TreeNode*> ExposureTree::leaves() const {
    std::vector<const TreeNode*> out;
    for (const auto& n : nodes_)
        if (n.is_leaf()) out.push_back(&n);
    return out;
}

std::uint32_t ExposureTree::assign_condition(const double* row) const {
    require(!nodes_.empty(), "assign_condition: empty tree");
    std::uint32_t id = 0;
    while (!nodes_[id].is_leaf()) {
        const TreeNode& n = nodes_[id];
        if (n.left < 0 || n.right < 0) fail("assign_condition: malformed tree");
        const std::uint16_t v = quantize16(row[n.split_axis]);
        id = static_cast<std::uint32_t>(v <= n.theta_code ? n.left : n.right);
    }
    return id;
}

std::uint32_t ExposureTree::assign_condition(const std::vector<double>& row) const {
    require(row.size() == columns_.size(), "assign_condition: row width mismatch");
    return assign_condition(row.data());
}

std::string ExposureTree::to_json() const {
    json doc;
    doc["format"] = "cnm-tree";
    doc["version"] = 1;
    doc["mode"] = mode_ == TreeMode::PotentialOutcomes ? "potential-outcomes"
                                                       : "direct-effects";
    doc["estimated"] = estimated_;
    doc["columns"] = columns_;
    doc["hyperparams"] = {{"gamma", hp_.gamma},     {"kappa", hp_.kappa},
                          {"delta", hp_.delta},     {"epsilon", hp_.epsilon},
                          {"eta", hp_.eta},         {"phi", hp_.phi},
                          {"R", hp_.R},             {"seed", hp_.seed},
                          {"max_depth", hp_.max_depth}};
    json nodes = json::array();
    for (const auto& n : nodes_) {
        json jn;
        jn["id"] = n.id;
        jn["parent"] = n.parent;
        if (n.is_leaf())
            jn["split"] = nullptr;
        else
            jn["split"] = {{"axis_name", columns_[static_cast<std::size_t>(n.split_axis)]},
                           {"theta", n.theta}};
        jn["n_train"] = n.n_train;
        jn["n_est"] = n.n_est;
        if (n.has_estimate) {
            jn["estimate"] = n.value;
            jn["std_error"] = n.std_error;
        } else {
            jn["estimate"] = nullptr;
            jn["std_error"] = nullptr;
        }
        jn["wsse_train"] = n.wsse_train;
        nodes.push_back(std::move(jn));
    }
    doc["nodes"] = std::move(nodes);
    return doc.dump(2);
}

ExposureTree ExposureTree::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        fail(std::string("tree import: invalid JSON: ") + e.what());
    }
    require(doc.value("format", "") == "cnm-tree", "tree import: not a tree document");
    require(doc.value("version", 0) == 1, "tree import: unsupported version");

    ExposureTree tree;
    tree.mode_ = doc.value("mode", "potential-outcomes") == std::string("direct-effects")
                     ? TreeMode::DirectEffects
                     : TreeMode::PotentialOutcomes;
    tree.estimated_ = doc.value("estimated", false);
    tree.columns_ = doc.at("columns").get<std::vector<std::string>>();
    const auto& hp = doc.at("hyperparams");
    tree.hp_.gamma = hp.at("gamma").get<double>();
    tree.hp_.kappa = hp.at("kappa").get<std::uint32_t>();
    tree.hp_.delta = hp.at("delta").get<double>();
    tree.hp_.epsilon = hp.at("epsilon").get<double>();
    tree.hp_.eta = hp.at("eta").get<std::uint32_t>();
    tree.hp_.phi = hp.at("phi").get<double>();
    tree.hp_.R = hp.at("R").get<std::uint32_t>();
    tree.hp_.seed = hp.at("seed").get<Seed>();
    tree.hp_.max_depth = hp.at("max_depth").get<std::uint32_t>();

    const auto& jnodes = doc.at("nodes");
    tree.nodes_.resize(jnodes.size());
    for (std::size_t k = 0; k < jnodes.size(); ++k) {
        const auto& jn = jnodes[k];
        TreeNode& n = tree.nodes_[k];
        n.id = jn.at("id").get<std::uint32_t>();
        require(n.id == k, "tree import: node ids must be dense and ordered");
        n.parent = jn.at("parent").get<std::int32_t>();
        if (!jn.at("split").is_null()) {
            const std::string axis_name = jn.at("split").at("axis_name").get<std::string>();
            const auto it = std::find(tree.columns_.begin(), tree.columns_.end(), axis_name);
            require(it != tree.columns_.end(), "tree import: unknown split axis " + axis_name);
            n.split_axis = static_cast<std::int32_t>(it - tree.columns_.begin());
            n.theta = jn.at("split").at("theta").get<double>();
            n.theta_code = quantize16(n.theta);
        }
        n.n_train = jn.at("n_train").get<std::uint32_t>();
        n.n_est = jn.at("n_est").get<std::uint32_t>();
        if (!jn.at("estimate").is_null()) {
            n.has_estimate = true;
            n.value = jn.at("estimate").get<double>();
            n.std_error = jn.at("std_error").get<double>();
        }
        n.wsse_train = jn.at("wsse_train").get<double>();
    }
    // rebuild children (first child in id order is the <= side), depths,
    // partitions, and leaf numbering
    for (std::size_t k = 1; k < tree.nodes_.size(); ++k) {
        TreeNode& n = tree.nodes_[k];
        require(n.parent >= 0 && static_cast<std::size_t>(n.parent) < k,
                "tree import: bad parent pointer");
        TreeNode& p = tree.nodes_[static_cast<std::size_t>(n.parent)];
        require(!p.is_leaf(), "tree import: leaf with children");
        if (p.left < 0)
            p.left = static_cast<std::int32_t>(k);
        else if (p.right < 0)
            p.right = static_cast<std::int32_t>(k);
        else
            fail("tree import: node with more than two children");
        n.depth = p.depth + 1;
        n.partition = p.partition;
        n.partition.add(static_cast<std::uint32_t>(p.split_axis), p.theta,
                        p.left == static_cast<std::int32_t>(k));
    }
    std::int32_t leaf_counter = 0;
    for (auto& n : tree.nodes_) {
        if (n.split_axis >= 0)
            require(n.left >= 0 && n.right >= 0, "tree import: missing children");
        if (n.is_leaf()) n.leaf_index = leaf_counter++;
    }
    tree.n_leaves_ = static_cast<std::uint32_t>(leaf_counter);
    return tree;
}

namespace {

std::string format_estimate(const TreeNode& n) {
    char buf[128];
    if (!n.has_estimate) {
        std::snprintf(buf, sizeof(buf), "(no estimate) (%u)", n.n_est);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.4f ± %.4f (%u)", n.value, n.std_error, n.n_est);
    return buf;
}

} // namespace

std::string ExposureTree::to_dot() const {
    std::ostringstream out;
    out << "digraph exposure_tree {\n  node [shape=box];\n";
    for (const auto& n : nodes_) {
        out << "  n" << n.id << " [label=\"";
        if (n.is_leaf()) {
            out << "d" << (n.leaf_index + 1) << ": " << format_estimate(n);
        } else {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "%s <= %.6g",
                          columns_[static_cast<std::size_t>(n.split_axis)].c_str(), n.theta);
            out << buf;
            if (estimated_ && n.has_estimate) out << "\\n" << format_estimate(n);
        }
        out << "\"];\n";
    }
    for (const auto& n : nodes_) {
        if (n.is_leaf()) continue;
        out << "  n" << n.id << " -> n" << n.left << " [label=\"yes\"];\n";
        out << "  n" << n.id << " -> n" << n.right << " [label=\"no\"];\n";
    }
    out << "}\n";
    return out.str();
}

GateResult gate(const ExposureTree& tree) {
    require(tree.estimated(), "gate: tree has no honest estimates");
    require(tree.mode() == TreeMode::PotentialOutcomes,
            "gate: requires a potential-outcome tree");
    const auto& cols = tree.columns();
    static const std::vector<std::string> fully_treated{"2-1", "3o-2", "3c-2", "4o-3"};
    static const std::vector<std::string> fully_control{"2-0", "3o-0", "3c-0", "4o-0"};
    std::vector<double> corner1(cols.size(), 0.0), corner0(cols.size(), 0.0);
    corner1[0] = 1.0;
    for (std::size_t c = 1; c < cols.size(); ++c) {
        if (std::find(fully_treated.begin(), fully_treated.end(), cols[c]) !=
            fully_treated.end())
            corner1[c] = 1.0;
        if (std::find(fully_control.begin(), fully_control.end(), cols[c]) !=
            fully_control.end())
            corner0[c] = 1.0;
    }
    GateResult res;
    res.leaf_treated = tree.assign_condition(corner1.data());
    res.leaf_control = tree.assign_condition(corner0.data());
    const TreeNode& t = tree.node(res.leaf_treated);
    const TreeNode& c = tree.node(res.leaf_control);
    if (!t.has_estimate || !c.has_estimate) {
        res.degenerate = true;
        return res;
    }
    res.estimate.value = t.value - c.value;
    res.estimate.std_error = std::sqrt(t.std_error * t.std_error + c.std_error * c.std_error);
    res.estimate.n_members = t.n_est + c.n_est;
    res.estimate.effective_weight = t.effective_weight + c.effective_weight;
    return res;
}

ExposureTree direct_effect_tree(const FeatureMatrix& F, const std::vector<double>& y,
                                const std::vector<std::uint32_t>& train_ids,
                                const std::vector<std::uint32_t>& est_ids,
                                const ReplicateFeatures& repl, const HyperParams& params,
                                unsigned threads) {
    ExposureTree tree = fit(F, y, train_ids, repl, params, TreeMode::DirectEffects, threads);
    honest_estimate(tree, F, y, est_ids, repl, threads);
    return tree;
}

std::vector<LeafPositivity> verify_leaf_positivity(const ExposureTree& tree,
                                                   const ReplicateFeatures& repl,
                                                   unsigned threads) {
    std::vector<LeafPositivity> out;
    for (const TreeNode* leaf : tree.leaves()) {
        const InclusionProbabilities pi = inclusion_prob(repl, leaf->partition, threads);
        out.push_back({leaf->id, positivity_check(pi, tree.hyperparams().epsilon,
                                                  tree.hyperparams().delta)});
    }
    return out;
}

} // namespace cnm
