#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cnm/assignment.hpp"
#include "cnm/common.hpp"
#include "cnm/graph.hpp"
#include "cnm/motifs.hpp"

namespace cnm {

/// Feature-value quantization. Fixed16 stores tensor entries as 16-bit fixed
/// point in [0,1] (error < 1e-4) and runs every membership comparison on the
/// quantized codes of both sides, so threshold semantics are consistent
/// between stored replicate rows and observed rows. Exact keeps doubles.
enum class Quantization : std::uint8_t { Fixed16 = 0, Exact = 1 };

constexpr std::uint16_t quantize16(double v) {
    return static_cast<std::uint16_t>(v * 65535.0 + 0.5);
}
constexpr double dequantize16(std::uint16_t q) { return q / 65535.0; }

/// Axis-aligned conjunction of half-space constraints over [0,1]^{m+1}.
/// An empty constraint list is the full cube. Canonical form keeps at most
/// one lower bound (>) and one upper bound (<=) per axis; boundary values
/// belong to the <= side.
struct Constraint {
    std::uint32_t axis = 0;
    double bound = 0.0;
    bool is_upper = true; // true: value <= bound; false: value > bound
};

class Partition {
public:
    Partition() = default;

    /// Tightens the partition with one more constraint; keeps canonical form.
    /// Fails if the interior becomes empty (lower >= upper on some axis).
    void add(std::uint32_t axis, double bound, bool is_upper);

    const std::vector<Constraint>& constraints() const { return constraints_; }
    bool is_full_cube() const { return constraints_.empty(); }
    std::uint32_t max_axis() const;

    bool contains_q(const std::uint16_t* row) const;
    bool contains(const double* row, Quantization q) const;

private:
    std::vector<Constraint> constraints_; // canonical: sorted by (axis, is_upper)
};

/// N x R x (m+1) tensor of feature rows across Monte Carlo re-randomizations,
/// node-major with per-node contiguous R x (m+1) blocks. The retained node
/// set and column list come from the structure-only census, so they are
/// identical across replicates.
class ReplicateFeatures {
public:
    std::uint32_t n_obs() const { return n_obs_; }
    std::uint32_t n_replicates() const { return R_; }
    std::uint32_t n_cols() const { return static_cast<std::uint32_t>(columns_.size()); }
    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<NodeId>& node_ids() const { return node_ids_; }
    Quantization quantization() const { return quant_; }

    /// Quantized code of entry (obs, replicate, col).
    std::uint16_t code(std::uint32_t i, std::uint32_t r, std::uint32_t c) const {
        return quant_ == Quantization::Fixed16
                   ? q_[offset(i, r) + c]
                   : quantize16(x_[offset(i, r) + c]);
    }
    double value(std::uint32_t i, std::uint32_t r, std::uint32_t c) const {
        return quant_ == Quantization::Fixed16 ? dequantize16(q_[offset(i, r) + c])
                                               : x_[offset(i, r) + c];
    }
    /// Raw quantized row pointer (Fixed16 only).
    const std::uint16_t* qrow(std::uint32_t i, std::uint32_t r) const {
        return q_.data() + offset(i, r);
    }

    bool row_in(std::uint32_t i, std::uint32_t r, const Partition& p) const;

    /// Builds the tensor directly from values (tests, bindings).
    static ReplicateFeatures from_values(std::vector<std::string> columns,
                                         std::vector<NodeId> node_ids,
                                         std::uint32_t R,
                                         const std::vector<double>& values,
                                         Quantization quant = Quantization::Fixed16);

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static ReplicateFeatures load(std::istream& in);
    static ReplicateFeatures load_file(const std::string& path);

private:
    friend ReplicateFeatures replicate_features(const MotifCensus&, const Graph&,
                                                const InterferenceVectors&, const Design&,
                                                std::uint32_t, Seed, Quantization, unsigned);
    std::size_t offset(std::uint32_t i, std::uint32_t r) const {
        return (static_cast<std::size_t>(i) * R_ + r) * columns_.size();
    }

    std::uint32_t n_obs_ = 0;
    std::uint32_t R_ = 0;
    std::vector<std::string> columns_;
    std::vector<NodeId> node_ids_;
    Quantization quant_ = Quantization::Fixed16;
    std::vector<std::uint16_t> q_; // Fixed16 payload
    std::vector<double> x_;        // Exact payload
};

/// Runs the census once, then one labeled pass per replicate under
/// counter-derived seed substreams. Deterministic given the seed; replicates
/// are computed in parallel with results identical to serial execution.
ReplicateFeatures replicate_features(const Graph& g, const Design& design,
                                     const MotifCatalog& catalog,
                                     const MissingPolicy& policy, std::uint32_t R,
                                     Seed seed,
                                     Quantization quant = Quantization::Fixed16,
                                     unsigned threads = 0);

/// Same, reusing a prebuilt census and feature plan (kept kinds and nodes).
ReplicateFeatures replicate_features(const MotifCensus& census, const Graph& g,
                                     const InterferenceVectors& plan,
                                     const Design& design, std::uint32_t R, Seed seed,
                                     Quantization quant = Quantization::Fixed16,
                                     unsigned threads = 0);

/// Indicator per row of F: 1 iff all constraints hold (quantized compare).
std::vector<std::uint8_t> membership(const FeatureMatrix& F, const Partition& p,
                                     Quantization quant = Quantization::Fixed16);

/// Smoothed Monte Carlo inclusion probabilities
/// pi_hat_i = (#replicates whose row lies in the partition + 1) / (R + 1),
/// so every value is in [1/(R+1), 1] and no downstream division can hit zero.
struct InclusionProbabilities {
    std::vector<double> pi_hat;
    std::uint32_t R = 0;
};

InclusionProbabilities inclusion_prob(const ReplicateFeatures& repl,
                                      const Partition& p, unsigned threads = 0);

struct PositivityResult {
    bool pass = false;
    double violating_fraction = 0.0;
    std::uint64_t violating_count = 0;
};

/// Non-trivial positivity over the whole retained universe: pass iff
/// #{i : pi_hat_i <= eps} <= delta * |universe|.
PositivityResult positivity_check(const InclusionProbabilities& pi_hat, double eps,
                                  double delta);

/// Default eps flags exactly the zero-replicate-hit observations.
inline double default_epsilon(std::uint32_t R) { return 1.0 / (R + 1.0) + 1e-12; }

} // namespace cnm
