#include "cnm/exposure.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cnm/parallel.hpp"
#include "cnm/rng.hpp"

namespace cnm {

void Partition::add(std::uint32_t axis, double bound, bool is_upper) {
    Constraint* existing = nullptr;
    for (auto& c : constraints_)
        if (c.axis == axis && c.is_upper == is_upper) existing = &c;
    if (existing) {
        // keep the tighter bound
        if (is_upper)
            existing->bound = std::min(existing->bound, bound);
        else
            existing->bound = std::max(existing->bound, bound);
    } else {
        constraints_.push_back({axis, bound, is_upper});
        std::sort(constraints_.begin(), constraints_.end(),
                  [](const Constraint& a, const Constraint& b) {
                      if (a.axis != b.axis) return a.axis < b.axis;
                      return a.is_upper < b.is_upper;
                  });
    }
    // non-empty interior: lower < upper on every axis (quantized scale)
    for (const auto& lo : constraints_) {
        if (lo.is_upper) continue;
        for (const auto& hi : constraints_) {
            if (!hi.is_upper || hi.axis != lo.axis) continue;
            if (quantize16(lo.bound) >= quantize16(hi.bound))
                fail("partition has empty interior on axis " + std::to_string(lo.axis));
        }
    }
}

std::uint32_t Partition::max_axis() const {
    std::uint32_t m = 0;
    for (const auto& c : constraints_) m = std::max(m, c.axis);
    return m;
}

bool Partition::contains_q(const std::uint16_t* row) const {
    for (const auto& c : constraints_) {
        const std::uint16_t v = row[c.axis];
        const std::uint16_t b = quantize16(c.bound);
        if (c.is_upper ? (v > b) : (v <= b)) return false;
    }
    return true;
}

bool Partition::contains(const double* row, Quantization q) const {
    for (const auto& c : constraints_) {
        if (q == Quantization::Fixed16) {
            const std::uint16_t v = quantize16(row[c.axis]);
            const std::uint16_t b = quantize16(c.bound);
            if (c.is_upper ? (v > b) : (v <= b)) return false;
        } else {
            const double v = row[c.axis];
            if (c.is_upper ? (v > c.bound) : (v <= c.bound)) return false;
        }
    }
    return true;
}

bool ReplicateFeatures::row_in(std::uint32_t i, std::uint32_t r, const Partition& p) const {
    if (!p.is_full_cube() && p.max_axis() >= n_cols())
        fail("partition axis " + std::to_string(p.max_axis()) + " out of range (m+1=" +
             std::to_string(n_cols()) + ")");
    if (quant_ == Quantization::Fixed16) return p.contains_q(qrow(i, r));
    return p.contains(x_.data() + offset(i, r), quant_);
}

ReplicateFeatures ReplicateFeatures::from_values(std::vector<std::string> columns,
                                                 std::vector<NodeId> node_ids,
                                                 std::uint32_t R,
                                                 const std::vector<double>& values,
                                                 Quantization quant) {
    ReplicateFeatures rf;
    rf.n_obs_ = static_cast<std::uint32_t>(node_ids.size());
    rf.R_ = R;
    rf.columns_ = std::move(columns);
    rf.node_ids_ = std::move(node_ids);
    rf.quant_ = quant;
    const std::size_t total =
        static_cast<std::size_t>(rf.n_obs_) * R * rf.columns_.size();
    require(values.size() == total, "replicate tensor size mismatch");
    if (quant == Quantization::Fixed16) {
        rf.q_.resize(total);
        for (std::size_t k = 0; k < total; ++k) rf.q_[k] = quantize16(values[k]);
    } else {
        rf.x_ = values;
    }
    return rf;
}

ReplicateFeatures replicate_features(const MotifCensus& census, const Graph& g,
                                     const InterferenceVectors& plan,
                                     const Design& design, std::uint32_t R, Seed seed,
                                     Quantization quant, unsigned threads) {
    require(R >= 1, "replicate count R must be >= 1");
    design.validate(g.n_nodes());

    ReplicateFeatures rf;
    rf.n_obs_ = static_cast<std::uint32_t>(plan.kept_nodes.size());
    rf.R_ = R;
    rf.columns_.push_back("Z");
    rf.columns_.insert(rf.columns_.end(), plan.feature_names.begin(),
                       plan.feature_names.end());
    rf.node_ids_ = plan.kept_nodes;
    rf.quant_ = quant;
    const std::size_t ncols = rf.columns_.size();
    const std::size_t total = static_cast<std::size_t>(rf.n_obs_) * R * ncols;
    if (quant == Quantization::Fixed16)
        rf.q_.assign(total, 0);
    else
        rf.x_.assign(total, 0.0);

    // kind layout of the kept features, shared by every replicate pass
    const auto& kinds = census.catalog().kinds;
    std::vector<std::size_t> label_offset(kinds.size());
    {
        std::size_t off = 0;
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            label_offset[k] = off;
            off += alter_count(kinds[k]) + 1;
        }
    }
    std::vector<std::uint8_t> kind_kept(kinds.size(), 1);
    {
        for (std::size_t k = 0; k < kinds.size(); ++k)
            for (MotifKind dropped : plan.report.dropped_kinds)
                if (kinds[k] == dropped) kind_kept[k] = 0;
    }
    const std::uint32_t full_width = census.catalog().n_labels();

    parallel_indices(R, threads, [&](std::size_t rr) {
        const std::uint32_t r = static_cast<std::uint32_t>(rr);
        const AssignmentVector z = draw_replicate(design, g.n_nodes(), seed, r);
        std::vector<std::uint64_t> counts(full_width);
        for (std::uint32_t i = 0; i < rf.n_obs_; ++i) {
            const NodeId ego = rf.node_ids_[i];
            census.label_ego(ego, z, g, counts.data());
            const std::size_t base = (static_cast<std::size_t>(i) * R + r) * ncols;
            double zval = static_cast<double>(z[ego]);
            if (quant == Quantization::Fixed16)
                rf.q_[base] = quantize16(zval);
            else
                rf.x_[base] = zval;
            std::size_t c = 1;
            for (std::size_t k = 0; k < kinds.size(); ++k) {
                if (!kind_kept[k]) continue;
                const double denom =
                    static_cast<double>(census.unlabeled(ego, kinds[k]));
                for (std::uint32_t t = 0; t <= alter_count(kinds[k]); ++t, ++c) {
                    const double v =
                        static_cast<double>(counts[label_offset[k] + t]) / denom;
                    if (quant == Quantization::Fixed16)
                        rf.q_[base + c] = quantize16(v);
                    else
                        rf.x_[base + c] = v;
                }
            }
        }
    });
    return rf;
}

ReplicateFeatures replicate_features(const Graph& g, const Design& design,
                                     const MotifCatalog& catalog,
                                     const MissingPolicy& policy, std::uint32_t R,
                                     Seed seed, Quantization quant, unsigned threads) {
    const MotifCensus census = MotifCensus::build(g, catalog, threads);
    // plan from structure only: any assignment gives the same kept sets
    const AssignmentVector z0(g.n_nodes(), 0);
    const MotifCounts counts = label_counts(census, g, z0, threads);
    const InterferenceVectors plan = interference_vector(counts, policy);
    return replicate_features(census, g, plan, design, R, seed, quant, threads);
}

std::vector<std::uint8_t> membership(const FeatureMatrix& F, const Partition& p,
                                     Quantization quant) {
    if (!p.is_full_cube() && p.max_axis() >= F.n_cols())
        fail("partition axis " + std::to_string(p.max_axis()) + " out of range (m+1=" +
             std::to_string(F.n_cols()) + ")");
    std::vector<std::uint8_t> member(F.n_rows());
    for (std::size_t i = 0; i < F.n_rows(); ++i)
        member[i] = p.contains(F.row(i), quant) ? 1 : 0;
    return member;
}

InclusionProbabilities inclusion_prob(const ReplicateFeatures& repl,
                                      const Partition& p, unsigned threads) {
    if (!p.is_full_cube() && p.max_axis() >= repl.n_cols())
        fail("partition axis " + std::to_string(p.max_axis()) + " out of range (m+1=" +
             std::to_string(repl.n_cols()) + ")");
    InclusionProbabilities out;
    out.R = repl.n_replicates();
    out.pi_hat.resize(repl.n_obs());
    const double denom = repl.n_replicates() + 1.0;
    parallel_blocks(repl.n_obs(), 1024, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            std::uint32_t hits = 0;
            for (std::uint32_t r = 0; r < repl.n_replicates(); ++r)
                hits += repl.row_in(static_cast<std::uint32_t>(i), r, p) ? 1 : 0;
            out.pi_hat[i] = (hits + 1.0) / denom;
        }
    });
    return out;
}

PositivityResult positivity_check(const InclusionProbabilities& pi_hat, double eps,
                                  double delta) {
    require(eps >= 0.0 && eps < 1.0, "positivity eps must be in [0,1)");
    require(delta >= 0.0 && delta < 1.0, "positivity delta must be in [0,1)");
    PositivityResult res;
    const std::size_t n = pi_hat.pi_hat.size();
    for (double v : pi_hat.pi_hat) res.violating_count += v <= eps ? 1 : 0;
    res.violating_fraction =
        n == 0 ? 0.0 : static_cast<double>(res.violating_count) / static_cast<double>(n);
    res.pass = static_cast<double>(res.violating_count) <= delta * static_cast<double>(n);
    return res;
}

namespace {

constexpr char kMagic[4] = {'C', 'N', 'M', 'X'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) fail("tensor cache: truncated file");
    return v;
}

} // namespace

void ReplicateFeatures::save(std::ostream& out) const {
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(n_obs_));
    write_pod(out, R_);
    write_pod(out, static_cast<std::uint32_t>(columns_.size()));
    write_pod(out, static_cast<std::uint8_t>(quant_));
    for (const auto& c : columns_) {
        write_pod(out, static_cast<std::uint32_t>(c.size()));
        out.write(c.data(), static_cast<std::streamsize>(c.size()));
    }
    for (NodeId id : node_ids_) write_pod(out, id);
    if (quant_ == Quantization::Fixed16)
        out.write(reinterpret_cast<const char*>(q_.data()),
                  static_cast<std::streamsize>(q_.size() * sizeof(std::uint16_t)));
    else
        out.write(reinterpret_cast<const char*>(x_.data()),
                  static_cast<std::streamsize>(x_.size() * sizeof(double)));
    if (!out) fail("tensor cache: write failed");
}

ReplicateFeatures ReplicateFeatures::load(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) fail("tensor cache: bad magic");
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion)
        fail("tensor cache: unsupported version " + std::to_string(version));
    ReplicateFeatures rf;
    rf.n_obs_ = static_cast<std::uint32_t>(read_pod<std::uint64_t>(in));
    rf.R_ = read_pod<std::uint32_t>(in);
    const auto ncols = read_pod<std::uint32_t>(in);
    rf.quant_ = static_cast<Quantization>(read_pod<std::uint8_t>(in));
    rf.columns_.resize(ncols);
    for (auto& c : rf.columns_) {
        const auto len = read_pod<std::uint32_t>(in);
        c.resize(len);
        in.read(c.data(), len);
        if (!in) fail("tensor cache: truncated column names");
    }
    rf.node_ids_.resize(rf.n_obs_);
    for (auto& id : rf.node_ids_) id = read_pod<NodeId>(in);
    const std::size_t total = static_cast<std::size_t>(rf.n_obs_) * rf.R_ * ncols;
    if (rf.quant_ == Quantization::Fixed16) {
        rf.q_.resize(total);
        in.read(reinterpret_cast<char*>(rf.q_.data()),
                static_cast<std::streamsize>(total * sizeof(std::uint16_t)));
    } else {
        rf.x_.resize(total);
        in.read(reinterpret_cast<char*>(rf.x_.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
    }
    if (!in) fail("tensor cache: truncated payload");
    return rf;
}

void ReplicateFeatures::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open tensor cache for writing: " + path);
    save(out);
}

ReplicateFeatures ReplicateFeatures::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open tensor cache: " + path);
    return load(in);
}

} // namespace cnm
