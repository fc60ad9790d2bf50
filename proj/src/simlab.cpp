#include "cnm/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cnm/parallel.hpp"
#include "cnm/rng.hpp"

namespace cnm {

using json = nlohmann::ordered_json;

Graph watts_strogatz(const WSConfig& cfg) {
    require(cfg.n >= 2, "watts-strogatz: n must be >= 2");
    require(cfg.k >= 2 && cfg.k % 2 == 0, "watts-strogatz: ring degree k must be even and >= 2");
    if (cfg.k >= cfg.n) fail("watts-strogatz: ring degree k must be < n");
    require(cfg.beta >= 0.0 && cfg.beta <= 1.0, "watts-strogatz: beta must be in [0,1]");

    const NodeId n = cfg.n;
    std::vector<std::vector<NodeId>> adj(n);
    auto adjacent = [&](NodeId u, NodeId v) {
        return std::find(adj[u].begin(), adj[u].end(), v) != adj[u].end();
    };
    auto add_edge = [&](NodeId u, NodeId v) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    };
    auto remove_edge = [&](NodeId u, NodeId v) {
        adj[u].erase(std::find(adj[u].begin(), adj[u].end(), v));
        adj[v].erase(std::find(adj[v].begin(), adj[v].end(), u));
    };

    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = 1; j <= cfg.k / 2; ++j) add_edge(i, (i + j) % n);

    Rng rng(cfg.seed);
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = 1; j <= cfg.k / 2; ++j) {
            if (!rng.bernoulli(cfg.beta)) continue;
            if (adj[i].size() >= n - 1) continue; // saturated, no valid target
            const NodeId old_target = (i + j) % n;
            NodeId t;
            do {
                t = static_cast<NodeId>(rng.below(n));
            } while (t == i || adjacent(i, t));
            remove_edge(i, old_target);
            add_edge(i, t);
        }
    }

    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(static_cast<std::size_t>(n) * cfg.k / 2);
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v : adj[u])
            if (u < v) edges.emplace_back(u, v);
    return Graph::from_edges(n, std::move(edges));
}

std::uint32_t structural_diversity(const Graph& g, NodeId i,
                                   const std::vector<NodeId>& subset) {
    if (subset.empty()) return 0;
    std::vector<NodeId> s = subset;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    const auto nb = g.neighbors(i);
    for (NodeId v : s)
        if (!std::binary_search(nb.begin(), nb.end(), v))
            fail("structural diversity: node " + std::to_string(v) +
                 " is not a neighbor of " + std::to_string(i));

    std::vector<std::uint32_t> parent(s.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    for (std::size_t a = 0; a < s.size(); ++a) {
        const auto adj_a = g.neighbors(s[a]);
        // merge adj(s[a]) with the members after position a
        std::size_t ia = 0, ib = a + 1;
        while (ia < adj_a.size() && ib < s.size()) {
            if (adj_a[ia] < s[ib]) {
                ++ia;
            } else if (s[ib] < adj_a[ia]) {
                ++ib;
            } else {
                const auto ra = find(static_cast<std::uint32_t>(a));
                const auto rb = find(static_cast<std::uint32_t>(ib));
                if (ra != rb) parent[ra] = rb;
                ++ia;
                ++ib;
            }
        }
    }
    std::uint32_t components = 0;
    for (std::size_t a = 0; a < s.size(); ++a)
        components += find(static_cast<std::uint32_t>(a)) == a ? 1 : 0;
    return components;
}

const char* dgp_name(DgpKind k) {
    switch (k) {
        case DgpKind::Cutoff: return "cutoff";
        case DgpKind::CausalStructuralDiversity: return "causal-sd";
        case DgpKind::CorrelationalStructuralDiversity: return "corr-sd";
        case DgpKind::NullEffect: return "null";
    }
    return "?";
}

DgpKind parse_dgp(const std::string& name) {
    if (name == "cutoff") return DgpKind::Cutoff;
    if (name == "causal-sd") return DgpKind::CausalStructuralDiversity;
    if (name == "corr-sd") return DgpKind::CorrelationalStructuralDiversity;
    if (name == "null") return DgpKind::NullEffect;
    fail("unknown dgp \"" + name + "\" (expected cutoff, causal-sd, corr-sd, or null)");
}

std::vector<double> generate_outcomes(const Graph& g, const AssignmentVector& z,
                                      const DGPSpec& spec, Seed seed,
                                      const MotifCensus* census) {
    const NodeId n = g.n_nodes();
    if (z.size() != n)
        fail("generate_outcomes: assignment vector length mismatch");
    require(spec.noise_sigma >= 0.0, "noise sigma must be >= 0");

    Rng gender_rng(derive_seed(seed, 11));
    Rng noise_rng(derive_seed(seed, 12));
    std::vector<double> gender(n), eps(n);
    for (NodeId i = 0; i < n; ++i) gender[i] = gender_rng.bernoulli(0.5) ? 1.0 : 0.0;
    for (NodeId i = 0; i < n; ++i) eps[i] = spec.noise_sigma * noise_rng.normal();

    std::vector<double> y(n);
    switch (spec.kind) {
        case DgpKind::Cutoff: {
            MotifCensus local;
            const MotifCensus* c = census;
            if (c == nullptr || !c->catalog().has(MotifKind::ClosedTriad)) {
                local = MotifCensus::build(
                    g, MotifCatalog{{MotifKind::Dyad, MotifKind::ClosedTriad}});
                c = &local;
            }
            for (NodeId i = 0; i < n; ++i) {
                const double deg = g.degree(i);
                const std::uint64_t total = c->unlabeled(i, MotifKind::ClosedTriad);
                double frac_3c2 = 0.0; // undefined fraction acts as 0 (gate closed)
                if (total > 0) {
                    const auto alters = g.neighbors(i);
                    std::uint64_t fully = 0;
                    for (const auto& p : c->alter_edges(i))
                        fully += (z[alters[p[0]]] & z[alters[p[1]]]) ? 1 : 0;
                    frac_3c2 = static_cast<double>(fully) / static_cast<double>(total);
                }
                y[i] = 0.1 * deg + gender[i] + 2.0 * z[i] * (frac_3c2 > 0.7 ? 1.0 : 0.0) +
                       eps[i];
            }
            break;
        }
        case DgpKind::CausalStructuralDiversity:
        case DgpKind::CorrelationalStructuralDiversity: {
            const bool treated_only = spec.kind == DgpKind::CausalStructuralDiversity;
            for (NodeId i = 0; i < n; ++i) {
                const auto nb = g.neighbors(i);
                std::vector<NodeId> subset;
                subset.reserve(nb.size());
                for (NodeId v : nb)
                    if (!treated_only || z[v]) subset.push_back(v);
                const double sd = structural_diversity(g, i, subset);
                y[i] = 0.1 * g.degree(i) + gender[i] + sd + z[i] * sd + eps[i];
            }
            break;
        }
        case DgpKind::NullEffect:
            for (NodeId i = 0; i < n; ++i)
                y[i] = static_cast<double>(g.degree(i)) + eps[i];
            break;
    }
    return y;
}

namespace {

struct PipelineData {
    FeatureMatrix F;
    ReplicateFeatures tensor;
    std::vector<double> y;                 // aligned with F rows
    std::vector<std::uint32_t> train_ids;  // F-row indices, ascending
    std::vector<std::uint32_t> est_ids;
    MissingReport missing;
};

PipelineData build_pipeline(const Graph& g, const MotifCensus& census,
                            const Design& design, const AssignmentVector& z,
                            const std::vector<double>& y_all,
                            const MissingPolicy& policy, std::uint32_t R,
                            Seed repl_seed, Seed split_seed, Quantization quant,
                            unsigned threads) {
    PipelineData pd;
    const MotifCounts counts = label_counts(census, g, z, threads);
    const InterferenceVectors iv = interference_vector(counts, policy);
    pd.F = feature_matrix(z, iv);
    pd.missing = iv.report;
    pd.tensor = replicate_features(census, g, iv, design, R, repl_seed, quant, threads);
    pd.y.reserve(pd.F.n_rows());
    for (NodeId id : pd.F.node_ids) pd.y.push_back(y_all[id]);

    std::vector<std::uint32_t> order(pd.F.n_rows());
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(split_seed);
    rng.shuffle(order);
    const std::size_t n_train = order.size() / 2;
    pd.train_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    pd.est_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(pd.train_ids.begin(), pd.train_ids.end());
    std::sort(pd.est_ids.begin(), pd.est_ids.end());
    return pd;
}

std::optional<SplitInfo> node_split(const ExposureTree& t, const TreeNode& n) {
    if (n.is_leaf()) return std::nullopt;
    return SplitInfo{t.columns()[static_cast<std::size_t>(n.split_axis)], n.theta};
}

std::optional<SplitInfo> treated_first_split_of(const ExposureTree& t) {
    const TreeNode& root = t.root();
    if (root.is_leaf()) return std::nullopt;
    if (t.columns()[static_cast<std::size_t>(root.split_axis)] != "Z") return std::nullopt;
    return node_split(t, t.node(static_cast<std::uint32_t>(root.right)));
}

ChildEffect child_effect(const ExposureTree& t, std::int32_t id) {
    ChildEffect ce;
    if (id < 0) return ce;
    const TreeNode& n = t.node(static_cast<std::uint32_t>(id));
    if (!n.has_estimate) return ce;
    ce.present = true;
    ce.value = n.value;
    ce.std_error = n.std_error;
    return ce;
}

Estimate difference_in_means(const std::vector<double>& y,
                             const std::vector<std::uint8_t>& zrow,
                             const std::vector<std::uint32_t>& ids) {
    double s1 = 0, s0 = 0, q1 = 0, q0 = 0;
    std::uint64_t n1 = 0, n0 = 0;
    for (std::uint32_t i : ids) {
        if (zrow[i]) {
            s1 += y[i];
            q1 += y[i] * y[i];
            ++n1;
        } else {
            s0 += y[i];
            q0 += y[i] * y[i];
            ++n0;
        }
    }
    require(n1 > 0 && n0 > 0, "difference in means: both groups required");
    const double m1 = s1 / static_cast<double>(n1);
    const double m0 = s0 / static_cast<double>(n0);
    const double v1 = q1 / static_cast<double>(n1) - m1 * m1;
    const double v0 = q0 / static_cast<double>(n0) - m0 * m0;
    Estimate est;
    est.value = m1 - m0;
    est.std_error = std::sqrt(std::max(0.0, v1) / static_cast<double>(n1) +
                              std::max(0.0, v0) / static_cast<double>(n0));
    est.n_members = n1 + n0;
    return est;
}

std::uint32_t column_index(const std::vector<std::string>& cols, const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    require(it != cols.end(), "column not found: " + name);
    return static_cast<std::uint32_t>(it - cols.begin());
}

} // namespace

bool significant_x_split(const ExposureTree& tree) {
    for (const TreeNode& n : tree.nodes()) {
        if (n.is_leaf() || n.split_axis == 0) continue;
        const TreeNode& l = tree.node(static_cast<std::uint32_t>(n.left));
        const TreeNode& r = tree.node(static_cast<std::uint32_t>(n.right));
        if (!l.has_estimate || !r.has_estimate) continue;
        const double gap = std::abs(l.value - r.value);
        const double se = std::sqrt(l.std_error * l.std_error + r.std_error * r.std_error);
        if (gap > 2.0 * se) return true;
    }
    return false;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
    RunReport rep;
    rep.config = cfg;
    const NodeId n = cfg.effective_n();
    const unsigned threads = cfg.threads;

    const Graph g = watts_strogatz({n, cfg.k, cfg.beta, derive_seed(cfg.seed, 101)});
    rep.n_edges = g.n_edges();
    const Design design = Design::cluster(ring_clusters(n, cfg.cluster_size), cfg.p);
    const AssignmentVector z = draw(design, n, derive_seed(cfg.seed, 102));

    const MotifCensus census_full = MotifCensus::build(g, MotifCatalog::full(), threads);
    const std::vector<double> y_all =
        generate_outcomes(g, z, cfg.dgp, derive_seed(cfg.seed, 103), &census_full);

    PipelineData full = build_pipeline(g, census_full, design, z, y_all, cfg.policy,
                                       cfg.R, derive_seed(cfg.seed, 104),
                                       derive_seed(cfg.seed, 105), cfg.quant, threads);
    rep.n_retained_full = full.F.n_rows();
    rep.missing_full = full.missing;

    const MotifCensus census_dyad = MotifCensus::build(g, MotifCatalog::dyad_only(), threads);
    PipelineData dyad = build_pipeline(g, census_dyad, design, z, y_all, cfg.policy,
                                       cfg.R, derive_seed(cfg.seed, 104),
                                       derive_seed(cfg.seed, 115), cfg.quant, threads);
    rep.n_retained_dyad = dyad.F.n_rows();

    // ground truth for the GATE under this DGP, over the retained population
    switch (cfg.dgp.kind) {
        case DgpKind::Cutoff: {
            std::uint64_t gated = 0;
            for (NodeId id : full.F.node_ids)
                gated += census_full.unlabeled(id, MotifKind::ClosedTriad) > 0 ? 1 : 0;
            rep.truth_gate = 2.0 * static_cast<double>(gated) /
                             static_cast<double>(full.F.n_rows());
            break;
        }
        case DgpKind::CausalStructuralDiversity:
        case DgpKind::CorrelationalStructuralDiversity: {
            double total = 0;
            for (NodeId id : full.F.node_ids) {
                const auto nb = g.neighbors(id);
                total += structural_diversity(g, id, {nb.begin(), nb.end()});
            }
            const double mean_sd = total / static_cast<double>(full.F.n_rows());
            rep.truth_gate =
                cfg.dgp.kind == DgpKind::CausalStructuralDiversity ? 2.0 * mean_sd : mean_sd;
            break;
        }
        case DgpKind::NullEffect: rep.truth_gate = 0.0; break;
    }

    HyperParams hp_full = cfg.hyper;
    hp_full.seed = derive_seed(cfg.seed, 106);
    rep.full_tree = fit(full.F, full.y, full.train_ids, full.tensor, hp_full,
                        TreeMode::PotentialOutcomes, threads);
    honest_estimate(rep.full_tree, full.F, full.y, full.est_ids, full.tensor, threads);

    HyperParams hp_dyad = cfg.hyper;
    hp_dyad.seed = derive_seed(cfg.seed, 116);
    rep.dyad_tree = fit(dyad.F, dyad.y, dyad.train_ids, dyad.tensor, hp_dyad,
                        TreeMode::PotentialOutcomes, threads);
    honest_estimate(rep.dyad_tree, dyad.F, dyad.y, dyad.est_ids, dyad.tensor, threads);

    HyperParams hp_direct = cfg.hyper;
    hp_direct.seed = derive_seed(cfg.seed, 107);
    rep.direct_tree = fit(full.F, full.y, full.train_ids, full.tensor, hp_direct,
                          TreeMode::DirectEffects, threads);
    honest_estimate(rep.direct_tree, full.F, full.y, full.est_ids, full.tensor, threads);

    rep.full_root_split = node_split(rep.full_tree, rep.full_tree.root());
    rep.treated_first_split = treated_first_split_of(rep.full_tree);
    rep.dyad_treated_first_split = treated_first_split_of(rep.dyad_tree);
    rep.direct_root_split = node_split(rep.direct_tree, rep.direct_tree.root());
    if (rep.direct_root_split) {
        rep.direct_above = child_effect(rep.direct_tree, rep.direct_tree.root().right);
        rep.direct_below = child_effect(rep.direct_tree, rep.direct_tree.root().left);
    }

    rep.gate_full = gate(rep.full_tree);
    rep.gate_dyad = gate(rep.dyad_tree);

    std::vector<std::uint8_t> zrow_full(full.F.n_rows());
    for (std::size_t i = 0; i < full.F.n_rows(); ++i)
        zrow_full[i] = full.F.at(i, 0) > 0.5 ? 1 : 0;
    rep.sutva = difference_in_means(full.y, zrow_full, full.est_ids);

    // four-condition exposure baseline on dyad features:
    // (no | direct | indirect | direct+indirect) via Z and any-treated-neighbor
    {
        const std::uint32_t z_axis = column_index(dyad.F.columns, "Z");
        const std::uint32_t frac_axis = column_index(dyad.F.columns, "2-1");
        const struct {
            const char* name;
            bool z_treated;
            bool any_treated_neighbor;
        } conds[4] = {{"no_exposure", false, false},
                      {"direct_only", true, false},
                      {"indirect_only", false, true},
                      {"direct_plus_indirect", true, true}};
        for (const auto& cond : conds) {
            Partition part;
            part.add(z_axis, 0.0, !cond.z_treated);
            part.add(frac_axis, 0.0, !cond.any_treated_neighbor);
            const auto member = membership(dyad.F, part, cfg.quant);
            std::uint64_t total = 0;
            for (auto m : member) total += m;
            ConditionSummary cs;
            cs.name = cond.name;
            cs.fraction = static_cast<double>(total) / static_cast<double>(dyad.F.n_rows());
            std::vector<std::uint32_t> members_est;
            for (std::uint32_t i : dyad.est_ids)
                if (member[i]) members_est.push_back(i);
            if (!members_est.empty()) {
                const auto pi = inclusion_prob(dyad.tensor, part, threads);
                cs.estimate = hajek(dyad.y, members_est, pi.pi_hat);
                cs.has_estimate = true;
            }
            rep.aronow_samii.push_back(std::move(cs));
        }
    }

    // positivity re-verification at every leaf, over the full retained universe
    rep.positivity_ok = true;
    rep.positivity_violations = 0;
    for (const auto& lp : verify_leaf_positivity(rep.full_tree, full.tensor, threads))
        if (!lp.result.pass) {
            rep.positivity_ok = false;
            ++rep.positivity_violations;
        }
    for (const auto& lp : verify_leaf_positivity(rep.dyad_tree, dyad.tensor, threads))
        if (!lp.result.pass) {
            rep.positivity_ok = false;
            ++rep.positivity_violations;
        }
    for (const TreeNode* leaf : rep.direct_tree.leaves()) {
        for (int zi = 0; zi < 2; ++zi) {
            Partition part = leaf->partition;
            part.add(0, 0.0, zi == 0);
            const auto pi = inclusion_prob(full.tensor, part, threads);
            const auto res = positivity_check(pi, rep.direct_tree.hyperparams().epsilon,
                                              rep.direct_tree.hyperparams().delta);
            if (!res.pass) {
                rep.positivity_ok = false;
                ++rep.positivity_violations;
            }
        }
    }

    rep.has_significant_x_split = significant_x_split(rep.full_tree);
    return rep;
}

namespace {

json split_to_json(const std::optional<SplitInfo>& s) {
    if (!s) return nullptr;
    return json{{"axis", s->axis}, {"theta", s->theta}};
}

json estimate_to_json(const Estimate& e) {
    return json{{"value", e.value},
                {"std_error", e.std_error},
                {"n_members", e.n_members},
                {"effective_weight", e.effective_weight}};
}

json gate_to_json(const GateResult& gr) {
    json j;
    j["degenerate"] = gr.degenerate;
    j["leaf_treated"] = gr.leaf_treated;
    j["leaf_control"] = gr.leaf_control;
    if (!gr.degenerate) {
        j["value"] = gr.estimate.value;
        j["std_error"] = gr.estimate.std_error;
    } else {
        j["value"] = nullptr;
        j["std_error"] = nullptr;
    }
    return j;
}

} // namespace

std::string RunReport::to_json() const {
    json doc;
    doc["format"] = "cnm-run-report";
    doc["version"] = 1;
    json jc;
    jc["n"] = config.effective_n();
    jc["k"] = config.k;
    jc["beta"] = config.beta;
    jc["cluster_size"] = config.cluster_size;
    jc["p"] = config.p;
    jc["R"] = config.R;
    jc["dgp"] = dgp_name(config.dgp.kind);
    jc["noise_sigma"] = config.dgp.noise_sigma;
    jc["missing_threshold"] = config.policy.feature_drop_threshold;
    jc["seed"] = config.seed;
    jc["paper_scale"] = config.paper_scale;
    jc["quantization"] = config.quant == Quantization::Fixed16 ? "fixed16" : "exact";
    jc["hyper"] = {{"gamma", config.hyper.gamma},   {"kappa", config.hyper.kappa},
                   {"delta", config.hyper.delta},   {"epsilon", config.hyper.epsilon},
                   {"eta", config.hyper.eta},       {"phi", config.hyper.phi},
                   {"max_depth", config.hyper.max_depth}};
    doc["config"] = std::move(jc);
    doc["n_edges"] = n_edges;
    doc["n_retained_full"] = n_retained_full;
    doc["n_retained_dyad"] = n_retained_dyad;
    doc["dropped_nodes"] = missing_full.dropped_nodes.size();
    {
        json dk = json::array();
        for (MotifKind k : missing_full.dropped_kinds) dk.push_back(kind_name(k));
        doc["dropped_kinds"] = std::move(dk);
    }
    doc["truth_gate"] = truth_gate;
    doc["full_root_split"] = split_to_json(full_root_split);
    doc["treated_first_split"] = split_to_json(treated_first_split);
    doc["dyad_treated_first_split"] = split_to_json(dyad_treated_first_split);
    doc["direct_root_split"] = split_to_json(direct_root_split);
    doc["direct_above"] = direct_above.present
                              ? json{{"tau", direct_above.value},
                                     {"std_error", direct_above.std_error}}
                              : json(nullptr);
    doc["direct_below"] = direct_below.present
                              ? json{{"tau", direct_below.value},
                                     {"std_error", direct_below.std_error}}
                              : json(nullptr);
    doc["gate_full"] = gate_to_json(gate_full);
    doc["gate_dyad"] = gate_to_json(gate_dyad);
    doc["sutva"] = estimate_to_json(sutva);
    {
        json as = json::array();
        for (const auto& c : aronow_samii) {
            json jcnd;
            jcnd["name"] = c.name;
            jcnd["fraction"] = c.fraction;
            if (c.has_estimate) {
                jcnd["value"] = c.estimate.value;
                jcnd["std_error"] = c.estimate.std_error;
            } else {
                jcnd["value"] = nullptr;
                jcnd["std_error"] = nullptr;
            }
            as.push_back(std::move(jcnd));
        }
        doc["aronow_samii"] = std::move(as);
    }
    doc["positivity_ok"] = positivity_ok;
    doc["positivity_violations"] = positivity_violations;
    doc["has_significant_x_split"] = has_significant_x_split;
    doc["full_tree"] = json::parse(full_tree.to_json());
    doc["dyad_tree"] = json::parse(dyad_tree.to_json());
    doc["direct_tree"] = json::parse(direct_tree.to_json());
    return doc.dump(2);
}

namespace {

std::string split_str(const std::optional<SplitInfo>& s) {
    if (!s) return "(none)";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s @ %.4f", s->axis.c_str(), s->theta);
    return buf;
}

std::string pm(double v, double se) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", v, se);
    return buf;
}

} // namespace

std::string RunReport::to_table() const {
    std::ostringstream out;
    out << "run: dgp=" << dgp_name(config.dgp.kind) << " n=" << config.effective_n()
        << " k=" << config.k << " beta=" << config.beta << " R=" << config.R
        << " seed=" << config.seed << "\n";
    out << "  retained: full=" << n_retained_full << " dyad=" << n_retained_dyad
        << " (dropped " << missing_full.dropped_nodes.size() << " nodes)\n";
    out << "  root split:          " << split_str(full_root_split) << "\n";
    out << "  treated-branch split: " << split_str(treated_first_split)
        << "   [dyad: " << split_str(dyad_treated_first_split) << "]\n";
    out << "  leaves: full=" << full_tree.n_leaves() << " dyad=" << dyad_tree.n_leaves()
        << " direct=" << direct_tree.n_leaves() << "\n";
    out << "  GATE truth=" << truth_gate;
    out << "  full=" << (gate_full.degenerate ? "(degenerate)"
                                              : pm(gate_full.estimate.value,
                                                   gate_full.estimate.std_error));
    out << "  dyad=" << (gate_dyad.degenerate ? "(degenerate)"
                                              : pm(gate_dyad.estimate.value,
                                                   gate_dyad.estimate.std_error));
    out << "  sutva=" << pm(sutva.value, sutva.std_error) << "\n";
    out << "  direct tree: root " << split_str(direct_root_split);
    if (direct_above.present)
        out << "  tau(>theta)=" << pm(direct_above.value, direct_above.std_error);
    if (direct_below.present)
        out << "  tau(<=theta)=" << pm(direct_below.value, direct_below.std_error);
    out << "\n";
    out << "  four-condition baseline:";
    for (const auto& c : aronow_samii) {
        out << "  " << c.name << "=" << (c.has_estimate
                                             ? pm(c.estimate.value, c.estimate.std_error)
                                             : std::string("(empty)"))
            << " [" << static_cast<int>(c.fraction * 1000) / 10.0 << "%]";
    }
    out << "\n";
    out << "  positivity: " << (positivity_ok ? "ok" : "VIOLATED") << " ("
        << positivity_violations << " violations)"
        << "  significant X split: " << (has_significant_x_split ? "yes" : "no") << "\n";
    return out.str();
}

} // namespace cnm
