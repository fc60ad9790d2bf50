#include "cnm/motifs.hpp"

#include <algorithm>
#include <cmath>

#include "cnm/parallel.hpp"

namespace cnm {

namespace {

constexpr std::uint64_t choose2(std::uint64_t n) { return n * (n - 1) / 2; }
constexpr std::uint64_t choose3(std::uint64_t n) {
    return n < 3 ? 0 : n * (n - 1) / 2 * (n - 2) / 3;
}

} // namespace

const char* kind_name(MotifKind k) {
    switch (k) {
        case MotifKind::Dyad: return "2";
        case MotifKind::OpenTriad: return "3o";
        case MotifKind::ClosedTriad: return "3c";
        case MotifKind::OpenTetrad: return "4o";
    }
    return "?";
}

std::string label_name(MotifKind k, std::uint32_t t) {
    return std::string(kind_name(k)) + "-" + std::to_string(t);
}

MotifCatalog MotifCatalog::full() {
    return {{MotifKind::Dyad, MotifKind::OpenTriad, MotifKind::ClosedTriad,
             MotifKind::OpenTetrad}};
}
MotifCatalog MotifCatalog::dyad_only() { return {{MotifKind::Dyad}}; }
MotifCatalog MotifCatalog::dyad_triad() {
    return {{MotifKind::Dyad, MotifKind::OpenTriad, MotifKind::ClosedTriad}};
}

MotifCatalog MotifCatalog::parse(const std::string& name) {
    if (name == "full") return full();
    if (name == "dyad") return dyad_only();
    if (name == "dyad-triad") return dyad_triad();
    fail("unknown catalog \"" + name + "\" (expected full, dyad, or dyad-triad)");
}

void MotifCatalog::validate() const {
    require(!kinds.empty(), "motif catalog must be non-empty");
    require(has(MotifKind::Dyad), "motif catalog must include dyads");
    for (std::size_t i = 1; i < kinds.size(); ++i)
        require(static_cast<int>(kinds[i - 1]) < static_cast<int>(kinds[i]),
                "motif catalog kinds must be unique and in canonical order");
}

bool MotifCatalog::has(MotifKind k) const {
    return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

std::uint32_t MotifCatalog::n_labels() const {
    std::uint32_t n = 0;
    for (MotifKind k : kinds) n += alter_count(k) + 1;
    return n;
}

std::vector<std::string> MotifCatalog::label_names() const {
    std::vector<std::string> names;
    for (MotifKind k : kinds)
        for (std::uint32_t t = 0; t <= alter_count(k); ++t) names.push_back(label_name(k, t));
    return names;
}

std::string MotifCatalog::name() const {
    if (kinds == full().kinds) return "full";
    if (kinds == dyad_only().kinds) return "dyad";
    if (kinds == dyad_triad().kinds) return "dyad-triad";
    std::string s;
    for (MotifKind k : kinds) {
        if (!s.empty()) s += "+";
        s += kind_name(k);
    }
    return s;
}

MotifCensus MotifCensus::build(const Graph& g, const MotifCatalog& catalog,
                               unsigned threads) {
    catalog.validate();
    const NodeId n = g.n_nodes();

    struct EgoLocal {
        std::vector<std::array<NodeId, 2>> pairs; // local alter indices, a < b
        std::vector<std::array<NodeId, 3>> tris;  // local, x < y < w
        std::uint64_t count_4o = 0;
    };
    std::vector<EgoLocal> locals(n);

    parallel_indices(n, threads, [&](std::size_t ego_idx) {
        const NodeId ego = static_cast<NodeId>(ego_idx);
        const auto alters = g.neighbors(ego);
        const NodeId d = static_cast<NodeId>(alters.size());
        EgoLocal& loc = locals[ego];

        // induced alter-alter edges via sorted merge of adj(alter) vs alters
        for (NodeId a = 0; a < d; ++a) {
            const auto adj_a = g.neighbors(alters[a]);
            std::size_t i = 0;
            NodeId b = a + 1;
            while (i < adj_a.size() && b < d) {
                if (adj_a[i] < alters[b]) {
                    ++i;
                } else if (alters[b] < adj_a[i]) {
                    ++b;
                } else {
                    loc.pairs.push_back({a, b});
                    ++i;
                    ++b;
                }
            }
        }

        const std::uint64_t e = loc.pairs.size();
        std::uint64_t wedges = 0;
        std::uint64_t n_tris = 0;
        if (d >= 3) {
            // induced alter graph H as local adjacency lists
            std::vector<std::vector<NodeId>> hadj(d);
            for (const auto& p : loc.pairs) {
                hadj[p[0]].push_back(p[1]);
                hadj[p[1]].push_back(p[0]);
            }
            for (NodeId v = 0; v < d; ++v) {
                std::sort(hadj[v].begin(), hadj[v].end());
                wedges += choose2(hadj[v].size());
            }
            for (const auto& p : loc.pairs) {
                const auto& na = hadj[p[0]];
                const auto& nb = hadj[p[1]];
                std::size_t i = 0, j = 0;
                while (i < na.size() && j < nb.size()) {
                    if (na[i] < nb[j]) {
                        ++i;
                    } else if (nb[j] < na[i]) {
                        ++j;
                    } else {
                        if (na[i] > p[1]) {
                            loc.tris.push_back({p[0], p[1], na[i]});
                            ++n_tris;
                        }
                        ++i;
                        ++j;
                    }
                }
            }
            // triples containing at least one induced edge, by inclusion-exclusion:
            // e*(d-2) - wedges + triangles
            const std::uint64_t with_edge = e * (d - 2) - wedges + n_tris;
            loc.count_4o = choose3(d) - with_edge;
        }
    });

    MotifCensus c;
    c.catalog_ = catalog;
    c.deg_.resize(n);
    c.count_3c_.resize(n);
    c.count_4o_.resize(n);
    c.pair_off_.assign(n + 1, 0);
    c.tri_off_.assign(n + 1, 0);
    for (NodeId i = 0; i < n; ++i) {
        c.deg_[i] = g.degree(i);
        c.count_3c_[i] = locals[i].pairs.size();
        c.count_4o_[i] = locals[i].count_4o;
        c.pair_off_[i + 1] = c.pair_off_[i] + locals[i].pairs.size();
        c.tri_off_[i + 1] = c.tri_off_[i] + locals[i].tris.size();
    }
    c.pairs_.resize(c.pair_off_[n]);
    c.tris_.resize(c.tri_off_[n]);
    for (NodeId i = 0; i < n; ++i) {
        std::copy(locals[i].pairs.begin(), locals[i].pairs.end(),
                  c.pairs_.begin() + static_cast<std::ptrdiff_t>(c.pair_off_[i]));
        std::copy(locals[i].tris.begin(), locals[i].tris.end(),
                  c.tris_.begin() + static_cast<std::ptrdiff_t>(c.tri_off_[i]));
    }
    return c;
}

std::uint64_t MotifCensus::unlabeled(NodeId ego, MotifKind kind) const {
    const std::uint64_t d = deg_[ego];
    switch (kind) {
        case MotifKind::Dyad: return d;
        case MotifKind::OpenTriad: return choose2(d) - count_3c_[ego];
        case MotifKind::ClosedTriad: return count_3c_[ego];
        case MotifKind::OpenTetrad: return count_4o_[ego];
    }
    return 0;
}

void MotifCensus::label_ego(NodeId ego, const AssignmentVector& z, const Graph& g,
                            std::uint64_t* out) const {
    const auto alters = g.neighbors(ego);
    const std::uint64_t d = alters.size();
    std::uint64_t n1 = 0;
    for (NodeId a : alters) n1 += z[a];
    const std::uint64_t n0 = d - n1;

    std::size_t cursor = 0;
    std::uint64_t c3c[3] = {0, 0, 0};
    const bool needs_pairs = catalog_.has(MotifKind::OpenTriad) ||
                             catalog_.has(MotifKind::ClosedTriad) ||
                             catalog_.has(MotifKind::OpenTetrad);
    const auto pairs = alter_edges(ego);
    if (needs_pairs) {
        for (const auto& p : pairs) {
            const std::uint32_t t = z[alters[p[0]]] + z[alters[p[1]]];
            ++c3c[t];
        }
    }

    for (MotifKind kind : catalog_.kinds) {
        switch (kind) {
            case MotifKind::Dyad:
                out[cursor++] = n0;
                out[cursor++] = n1;
                break;
            case MotifKind::OpenTriad: {
                out[cursor++] = choose2(n0) - c3c[0];
                out[cursor++] = n1 * n0 - c3c[1];
                out[cursor++] = choose2(n1) - c3c[2];
                break;
            }
            case MotifKind::ClosedTriad:
                out[cursor++] = c3c[0];
                out[cursor++] = c3c[1];
                out[cursor++] = c3c[2];
                break;
            case MotifKind::OpenTetrad: {
                // total triples by treated count, then subtract triples with
                // at least one induced edge (inclusion-exclusion: edge picks
                // minus shared-endpoint wedge pairs plus triangles), each term
                // bucketed by the triple's treated count.
                std::uint64_t total[4] = {choose3(n0), n1 * choose2(n0),
                                          choose2(n1) * n0, choose3(n1)};
                std::int64_t with_edge[4] = {0, 0, 0, 0};
                for (const auto& p : pairs) {
                    const std::uint32_t t = z[alters[p[0]]] + z[alters[p[1]]];
                    with_edge[t + 1] += static_cast<std::int64_t>(n1 - t);
                    with_edge[t] += static_cast<std::int64_t>(n0 - (2 - t));
                }
                if (d >= 3 && !pairs.empty()) {
                    // hdeg split by treatment per alter, from the pair list
                    std::vector<std::uint32_t> ht(d, 0), hc(d, 0);
                    for (const auto& p : pairs) {
                        const std::uint8_t zx = z[alters[p[0]]];
                        const std::uint8_t zy = z[alters[p[1]]];
                        ht[p[0]] += zy;
                        hc[p[0]] += 1 - zy;
                        ht[p[1]] += zx;
                        hc[p[1]] += 1 - zx;
                    }
                    for (std::uint64_t v = 0; v < d; ++v) {
                        const std::uint32_t tv = z[alters[v]];
                        with_edge[tv + 2] -= static_cast<std::int64_t>(choose2(ht[v]));
                        with_edge[tv + 1] -= static_cast<std::int64_t>(
                            static_cast<std::uint64_t>(ht[v]) * hc[v]);
                        with_edge[tv] -= static_cast<std::int64_t>(choose2(hc[v]));
                    }
                    for (const auto& tr : alter_triangles(ego)) {
                        const std::uint32_t t =
                            z[alters[tr[0]]] + z[alters[tr[1]]] + z[alters[tr[2]]];
                        with_edge[t] += 1;
                    }
                }
                for (int t = 0; t < 4; ++t)
                    out[cursor++] = total[t] - static_cast<std::uint64_t>(with_edge[t]);
                break;
            }
        }
    }
}

std::vector<std::vector<std::uint64_t>> census(const Graph& g,
                                               const MotifCatalog& catalog,
                                               unsigned threads) {
    const MotifCensus c = MotifCensus::build(g, catalog, threads);
    std::vector<std::vector<std::uint64_t>> counts(g.n_nodes());
    for (NodeId i = 0; i < g.n_nodes(); ++i) {
        counts[i].reserve(catalog.kinds.size());
        for (MotifKind k : catalog.kinds) counts[i].push_back(c.unlabeled(i, k));
    }
    return counts;
}

MotifCounts label_counts(const MotifCensus& census, const Graph& g,
                         const AssignmentVector& z, unsigned threads) {
    if (z.size() != g.n_nodes())
        fail("assignment vector length " + std::to_string(z.size()) +
             " does not match graph n=" + std::to_string(g.n_nodes()));
    MotifCounts mc;
    mc.catalog = census.catalog();
    mc.labels = mc.catalog.label_names();
    const NodeId n = g.n_nodes();
    const std::uint32_t width = mc.catalog.n_labels();
    mc.labeled.assign(n, {});
    mc.unlabeled.assign(n, {});
    parallel_indices(n, threads, [&](std::size_t i) {
        const NodeId ego = static_cast<NodeId>(i);
        mc.labeled[i].resize(width);
        census.label_ego(ego, z, g, mc.labeled[i].data());
        mc.unlabeled[i].reserve(mc.catalog.kinds.size());
        for (MotifKind k : mc.catalog.kinds) mc.unlabeled[i].push_back(census.unlabeled(ego, k));
    });
    return mc;
}

MotifCounts label_counts(const Graph& g, const MotifCatalog& catalog,
                         const AssignmentVector& z, unsigned threads) {
    return label_counts(MotifCensus::build(g, catalog, threads), g, z, threads);
}

InterferenceVectors interference_vector(const MotifCounts& counts,
                                        const MissingPolicy& policy) {
    const std::size_t n = counts.labeled.size();
    require(n > 0, "no egos in motif counts");
    const auto& kinds = counts.catalog.kinds;

    InterferenceVectors iv;
    iv.report.undefined_fraction.resize(kinds.size(), 0.0);
    std::vector<std::uint8_t> kind_kept(kinds.size(), 1);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        std::size_t undef = 0;
        for (std::size_t i = 0; i < n; ++i) undef += counts.unlabeled[i][k] == 0;
        const double frac = static_cast<double>(undef) / static_cast<double>(n);
        iv.report.undefined_fraction[k] = frac;
        // dyads stay: the dyad-only baseline and column contract depend on them
        if (kinds[k] != MotifKind::Dyad && frac > policy.feature_drop_threshold) {
            kind_kept[k] = 0;
            iv.report.dropped_kinds.push_back(kinds[k]);
        }
    }

    std::vector<std::size_t> label_offset(kinds.size());
    {
        std::size_t off = 0;
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            label_offset[k] = off;
            off += alter_count(kinds[k]) + 1;
        }
    }
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        if (!kind_kept[k]) continue;
        for (std::uint32_t t = 0; t <= alter_count(kinds[k]); ++t)
            iv.feature_names.push_back(counts.labels[label_offset[k] + t]);
    }
    require(!iv.feature_names.empty(), "missing-data policy left zero features");

    for (std::size_t i = 0; i < n; ++i) {
        bool defined = true;
        for (std::size_t k = 0; k < kinds.size(); ++k)
            if (kind_kept[k] && counts.unlabeled[i][k] == 0) {
                defined = false;
                break;
            }
        if (!defined) {
            iv.report.dropped_nodes.push_back(static_cast<NodeId>(i));
            continue;
        }
        iv.kept_nodes.push_back(static_cast<NodeId>(i));
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            if (!kind_kept[k]) continue;
            const double denom = static_cast<double>(counts.unlabeled[i][k]);
            for (std::uint32_t t = 0; t <= alter_count(kinds[k]); ++t)
                iv.x.push_back(static_cast<double>(counts.labeled[i][label_offset[k] + t]) / denom);
        }
    }
    if (iv.kept_nodes.empty()) fail("missing-data policy left zero nodes");
    iv.n_total = n;
    return iv;
}

FeatureMatrix feature_matrix(const AssignmentVector& z,
                             const InterferenceVectors& vectors) {
    if (z.size() != vectors.n_total)
        fail("assignment vector length " + std::to_string(z.size()) +
             " does not match interference-vector population " +
             std::to_string(vectors.n_total));
    FeatureMatrix fm;
    fm.columns.reserve(vectors.n_features() + 1);
    fm.columns.push_back("Z");
    fm.columns.insert(fm.columns.end(), vectors.feature_names.begin(),
                      vectors.feature_names.end());
    fm.node_ids = vectors.kept_nodes;
    fm.values.reserve(fm.node_ids.size() * fm.columns.size());
    for (std::size_t i = 0; i < vectors.kept_nodes.size(); ++i) {
        fm.values.push_back(static_cast<double>(z[vectors.kept_nodes[i]]));
        const double* r = vectors.row(i);
        fm.values.insert(fm.values.end(), r, r + vectors.n_features());
    }
    return fm;
}

std::vector<std::string> canonical_columns(const MotifCatalog& catalog) {
    std::vector<std::string> cols{"Z"};
    for (const auto& name : catalog.label_names()) cols.push_back(name);
    return cols;
}

} // namespace cnm
