#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnm/assignment.hpp"
#include "cnm/common.hpp"
#include "cnm/graph.hpp"

namespace cnm {

/// Ego-network motif kinds. The label arity of a kind with k alters is k+1
/// (0..k treated alters).
enum class MotifKind : std::uint8_t {
    Dyad = 0,       // ego + 1 alter                  labels 2-0, 2-1
    OpenTriad = 1,  // ego + 2 non-adjacent alters    labels 3o-0..2
    ClosedTriad = 2,// ego + 2 adjacent alters        labels 3c-0..2
    OpenTetrad = 3, // ego + 3 pairwise non-adjacent  labels 4o-0..3
};

constexpr std::array<MotifKind, 4> kAllKinds{MotifKind::Dyad, MotifKind::OpenTriad,
                                             MotifKind::ClosedTriad, MotifKind::OpenTetrad};

constexpr std::uint32_t alter_count(MotifKind k) {
    switch (k) {
        case MotifKind::Dyad: return 1;
        case MotifKind::OpenTriad:
        case MotifKind::ClosedTriad: return 2;
        case MotifKind::OpenTetrad: return 3;
    }
    return 0;
}

const char* kind_name(MotifKind k);                       // "2", "3o", "3c", "4o"
std::string label_name(MotifKind k, std::uint32_t t);     // e.g. "3c-2"

/// Ordered motif selection. Dyads are always present (the dyad-only baseline
/// needs them); kinds appear in canonical order 2, 3o, 3c, 4o.
struct MotifCatalog {
    std::vector<MotifKind> kinds;

    static MotifCatalog full();         // dyad, 3o, 3c, 4o
    static MotifCatalog dyad_only();    // dyad
    static MotifCatalog dyad_triad();   // dyad, 3o, 3c
    static MotifCatalog parse(const std::string& name); // "full" | "dyad" | "dyad-triad"

    void validate() const;
    bool has(MotifKind k) const;
    std::uint32_t n_labels() const;     // sum over kinds of (alter_count+1)
    /// Label names in canonical order, e.g. {"2-0","2-1","3o-0",...}.
    std::vector<std::string> label_names() const;
    std::string name() const;
};

/// Structure-only census results, computed once per graph and reused across
/// treatment re-randomizations. Besides the unlabeled counts this caches the
/// induced alter-alter edges and alter-triangles of each ego network, which
/// the labeled pass needs.
class MotifCensus {
public:
    static MotifCensus build(const Graph& g, const MotifCatalog& catalog,
                             unsigned threads = 0);

    NodeId n_nodes() const { return static_cast<NodeId>(deg_.size()); }
    const MotifCatalog& catalog() const { return catalog_; }

    /// Unlabeled count of `kind` at `ego` (dyad = degree, 3o+3c = C(deg,2),
    /// 4o = independent alter triples).
    std::uint64_t unlabeled(NodeId ego, MotifKind kind) const;
    NodeId degree(NodeId ego) const { return deg_[ego]; }

    /// Induced alter-alter edges as local alter indices (positions within
    /// g.neighbors(ego)), each pair a < b.
    std::span<const std::array<NodeId, 2>> alter_edges(NodeId ego) const {
        return {pairs_.data() + pair_off_[ego], pairs_.data() + pair_off_[ego + 1]};
    }
    /// Induced alter triangles as local alter indices, x < y < w.
    std::span<const std::array<NodeId, 3>> alter_triangles(NodeId ego) const {
        return {tris_.data() + tri_off_[ego], tris_.data() + tri_off_[ego + 1]};
    }

    /// Labeled counts for one ego under assignment z, written to `out` in
    /// canonical label order (length catalog().n_labels()). Exact at every
    /// degree: dyads/triads by direct bucketing, open tetrads by
    /// inclusion-exclusion over induced edges, wedges, and triangles.
    void label_ego(NodeId ego, const AssignmentVector& z, const Graph& g,
                   std::uint64_t* out) const;

private:
    MotifCatalog catalog_;
    std::vector<NodeId> deg_;
    std::vector<std::uint64_t> count_3c_, count_4o_;
    std::vector<std::uint64_t> pair_off_, tri_off_;
    std::vector<std::array<NodeId, 2>> pairs_; // induced alter edges (local)
    std::vector<std::array<NodeId, 3>> tris_;  // induced alter triangles (local)
};

/// Per-ego unlabeled counts in catalog order; spec-level census surface.
std::vector<std::vector<std::uint64_t>> census(const Graph& g,
                                               const MotifCatalog& catalog,
                                               unsigned threads = 0);

/// Labeled + unlabeled counts per ego for one assignment vector.
struct MotifCounts {
    MotifCatalog catalog;
    std::vector<std::string> labels;                    // canonical label names
    std::vector<std::vector<std::uint64_t>> labeled;    // [ego][label]
    std::vector<std::vector<std::uint64_t>> unlabeled;  // [ego][kind]
};

MotifCounts label_counts(const Graph& g, const MotifCatalog& catalog,
                         const AssignmentVector& z, unsigned threads = 0);
MotifCounts label_counts(const MotifCensus& census, const Graph& g,
                         const AssignmentVector& z, unsigned threads = 0);

/// Missing-data policy for egos whose unlabeled count of some kind is zero
/// (the fraction is undefined there). A kind whose undefined fraction
/// exceeds `feature_drop_threshold` is removed globally (dyads are never
/// removed); egos still undefined on a surviving kind are dropped.
/// threshold 0 = always drop features; threshold > 1 = always drop nodes.
struct MissingPolicy {
    double feature_drop_threshold = 0.05;

    static MissingPolicy auto_threshold(double t = 0.05) { return {t}; }
    static MissingPolicy drop_features() { return {0.0}; }
    static MissingPolicy drop_nodes() { return {2.0}; }
};

struct MissingReport {
    std::vector<MotifKind> dropped_kinds;
    std::vector<double> undefined_fraction; // per catalog kind, pre-policy
    std::vector<NodeId> dropped_nodes;
};

/// Normalized causal-motif fractions per kept ego. Within each kept kind the
/// defined fractions sum to 1.
struct InterferenceVectors {
    std::vector<std::string> feature_names;  // kept labels, canonical order
    std::vector<NodeId> kept_nodes;          // ascending original ids
    std::vector<double> x;                   // row-major kept_nodes x features
    std::size_t n_total = 0;                 // population before node drops
    MissingReport report;

    std::size_t n_features() const { return feature_names.size(); }
    const double* row(std::size_t i) const { return x.data() + i * n_features(); }
};

InterferenceVectors interference_vector(const MotifCounts& counts,
                                        const MissingPolicy& policy);

/// Rows (Z_i, X_i) in [0,1]^{m+1}; column 0 is "Z".
struct FeatureMatrix {
    std::vector<std::string> columns;  // "Z" + feature names
    std::vector<NodeId> node_ids;      // kept egos, ascending
    std::vector<double> values;        // row-major

    std::size_t n_rows() const { return node_ids.size(); }
    std::size_t n_cols() const { return columns.size(); }
    const double* row(std::size_t i) const { return values.data() + i * n_cols(); }
    double at(std::size_t i, std::size_t c) const { return values[i * n_cols() + c]; }
};

FeatureMatrix feature_matrix(const AssignmentVector& z,
                             const InterferenceVectors& vectors);

/// Canonical column list for a catalog: "Z" followed by every label name.
std::vector<std::string> canonical_columns(const MotifCatalog& catalog);

} // namespace cnm
