// Copyright 2026 The MDITE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Stochastic series expansion of the generalized partition function of the
// measurement-dressed imaginary-time evolution.
//
// Ring geometry. Tr(rho_{n_d}) unrolls into a periodic imaginary-time ring of
// 2 n_d half-strips, each an SSE string for exp(-tau H / 2). In propagation
// order strip j < n_d is the bra half of layer n_d - j and strip j >= n_d is
// the ket half of layer j - n_d + 1. Cut c sits just before strip c; cut 0 is
// the trace closure (its spins are a diagonal sample of rho_{n_d}) and cut n_d
// is the maximally mixed input. Measurement level k = 1..n_d-1 owns the pair
// of cuts (n_d - k, n_d + k). A measured (site, level) pins the site's spin on
// both cuts to the same value and joins the two worldline segments crossing
// them into one cluster; an unmeasured one imposes nothing.
//
// Weight of a configuration:
//   prod_strips (tau/2)^n (M-n)!/M!  *  prod_ops <matrix element>
//   * prod_flags (p if measured else 1-p)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mdite/error.hpp"
#include "mdite/model.hpp"
#include "mdite/rng.hpp"

namespace mdite {

enum class OpKind : uint8_t { Null, SiteDiag, SiteFlip, BondDiag, BondExchange };

inline bool is_diagonal(OpKind k) { return k == OpKind::SiteDiag || k == OpKind::BondDiag; }
inline bool is_site_op(OpKind k) { return k == OpKind::SiteDiag || k == OpKind::SiteFlip; }

struct Operator {
    OpKind kind = OpKind::Null;
    int32_t loc = -1;  // site for site operators, bond index otherwise

    bool operator==(const Operator &) const = default;
};

/// One half-strip exp(-beta H) with beta = tau / 2, padded with nulls.
struct StripString {
    double beta = 0.0;
    std::vector<Operator> ops;
    int n = 0;

    int truncation() const { return static_cast<int>(ops.size()); }
    bool operator==(const StripString &) const = default;
};

struct SampleRecord {
    double m = 0.0;
    double m_abs = 0.0;
    double m2 = 0.0;
    double m4 = 0.0;
    double flag_fraction = 0.0;
    long n_total = 0;
    /// Largest cluster of the nonlocal update, as the fraction of sites whose
    /// trace-closure spin it contains.
    double largest_cluster = 0.0;
};

struct MoveCounters {
    uint64_t inserted = 0;
    uint64_t removed = 0;
    uint64_t merges = 0;
    uint64_t splits = 0;
    uint64_t clusters = 0;
    bool operator==(const MoveCounters &) const = default;
};

/// P_add = min(beta N_b w / (M - n), 1)
inline double insertion_probability(double beta, int n_candidates, double element, int truncation, int n) {
    if (element <= 0.0) return 0.0;
    return std::min(beta * n_candidates * element / static_cast<double>(truncation - n), 1.0);
}

/// P_remove = min((M - n + 1) / (beta N_b w), 1) with n the current count.
inline double removal_probability(double beta, int n_candidates, double element, int truncation, int n) {
    return std::min(static_cast<double>(truncation - n + 1) / (beta * n_candidates * element), 1.0);
}

inline double merge_probability(double p) { return p >= 1.0 ? 1.0 : std::min(p / (1.0 - p), 1.0); }
inline double split_probability(double p) { return p <= 0.0 ? 1.0 : std::min((1.0 - p) / p, 1.0); }

/// ceil(4n/3) when n > 3M/4, else M.
inline int grown_truncation(int n, int truncation) {
    if (4L * n > 3L * truncation) return static_cast<int>((4L * n + 2) / 3);
    return truncation;
}

class SseState {
   public:
    SseState(ModelSpec model, ProtocolParams protocol, uint64_t seed)
        : model_(std::move(model)), protocol_(protocol), table_(operator_table(model_)), rng_(seed) {
        protocol_.validate();
        n_sites_ = model_.n_sites();
        n_layers_ = protocol_.n_layers;
        n_levels_ = n_layers_ - 1;
        stagger_.resize(n_sites_);
        for (int i = 0; i < n_sites_; ++i)
            stagger_[i] = model_.kind == ModelKind::Cdhm ? model_.lattice.stagger_sign(i) : 1;

        const double beta = 0.5 * protocol_.tau;
        double weight_sum = table_.has_site_operators() ? n_sites_ * table_.site_diag : 0.0;
        for (const BondVertex &v : table_.bonds) weight_sum += std::max(v.aligned, v.anti_aligned);
        max_diagonal_ = table_.has_site_operators() ? table_.site_diag : 0.0;
        for (const BondVertex &v : table_.bonds) max_diagonal_ = std::max({max_diagonal_, v.aligned, v.anti_aligned});
        const int initial = std::max(16, static_cast<int>(std::ceil(1.5 * beta * weight_sum)));
        strips_.assign(2 * n_layers_, StripString{beta, std::vector<Operator>(initial), 0});

        flags_.assign(static_cast<size_t>(n_sites_) * std::max(n_levels_, 0), 0);
        for (auto &f : flags_) f = rng_.bernoulli(protocol_.p) ? 1 : 0;
        top_spins_.resize(n_sites_);
        for (auto &s : top_spins_) s = rng_.coin() ? int8_t{1} : int8_t{-1};
    }

    // ---- geometry -------------------------------------------------------
    const ModelSpec &model() const { return model_; }
    const ProtocolParams &protocol() const { return protocol_; }
    const OperatorTable &table() const { return table_; }
    int n_sites() const { return n_sites_; }
    int n_layers() const { return n_layers_; }
    int n_levels() const { return n_levels_; }
    int n_strips() const { return 2 * n_layers_; }
    int bra_cut(int level) const { return n_layers_ - level; }
    int ket_cut(int level) const { return n_layers_ + level; }

    // ---- configuration --------------------------------------------------
    const std::vector<StripString> &strips() const { return strips_; }
    std::vector<StripString> &mutable_strips() { return strips_; }
    const std::vector<int8_t> &top_spins() const { return top_spins_; }
    std::vector<int8_t> &mutable_top_spins() { return top_spins_; }
    bool measured(int site, int level) const { return flags_[flag_index(site, level)] != 0; }
    void set_measured(int site, int level, bool value) { flags_[flag_index(site, level)] = value ? 1 : 0; }
    const std::vector<uint8_t> &flags() const { return flags_; }
    const MoveCounters &counters() const { return counters_; }
    const Rng &rng() const { return rng_; }
    uint64_t sweeps_done() const { return sweeps_; }

    long n_total() const {
        long total = 0;
        for (const auto &s : strips_) total += s.n;
        return total;
    }

    double flag_fraction() const {
        if (flags_.empty()) return 0.0;
        long c = 0;
        for (uint8_t f : flags_) c += f;
        return static_cast<double>(c) / static_cast<double>(flags_.size());
    }

    double observable_magnetization() const {
        long total = 0;
        for (int i = 0; i < n_sites_; ++i) total += stagger_[i] * top_spins_[i];
        return static_cast<double>(total);
    }

    /// Spins on every cut, propagated from the trace closure.
    std::vector<std::vector<int8_t>> boundary_sheets() const {
        std::vector<std::vector<int8_t>> sheets(n_strips());
        std::vector<int8_t> spins = top_spins_;
        for (int j = 0; j < n_strips(); ++j) {
            sheets[j] = spins;
            for (const Operator &op : strips_[j].ops) propagate(op, spins);
        }
        return sheets;
    }

    /// Same as boundary_sheets() into one flat [cut][site] buffer.
    void fill_sheets(std::vector<int8_t> &flat) const {
        flat.resize(static_cast<size_t>(n_strips()) * n_sites_);
        std::vector<int8_t> &spins = scratch_spins_;
        spins = top_spins_;
        for (int j = 0; j < n_strips(); ++j) {
            std::copy(spins.begin(), spins.end(), flat.begin() + static_cast<std::ptrdiff_t>(j) * n_sites_);
            for (const Operator &op : strips_[j].ops) propagate(op, spins);
        }
    }

    // ---- updates --------------------------------------------------------

    void diagonal_update() {
        std::vector<int8_t> &spins = scratch_spins_;
        spins = top_spins_;
        const int n_cand = table_.n_diag_candidates();
        const int n_bonds = static_cast<int>(table_.bonds.size());
        const double w_max = max_diagonal_;
        for (StripString &strip : strips_) {
            const int truncation = strip.truncation();
            for (Operator &op : strip.ops) {
                if (op.kind == OpKind::Null) {
                    if (n_cand == 0) continue;
                    // Screen with the largest element first: accepting with
                    // p_max, then with w / w_max, equals the direct rule
                    // whenever p_max <= 1.
                    const double p_max = insertion_probability(strip.beta, n_cand, w_max, truncation, strip.n);
                    const bool screened = p_max < 1.0;
                    if (screened && !(rng_.uniform() < p_max)) continue;
                    const int c = static_cast<int>(rng_.below(static_cast<uint64_t>(n_cand)));
                    Operator candidate;
                    double element;
                    if (c < n_bonds) {
                        const Bond &bond = model_.lattice.bonds[c];
                        element = table_.bonds[c].diagonal(spins[bond.a], spins[bond.b]);
                        candidate = Operator{OpKind::BondDiag, c};
                    } else {
                        element = table_.site_diag;
                        candidate = Operator{OpKind::SiteDiag, c - n_bonds};
                    }
                    if (element <= 0.0) continue;
                    const bool accept =
                        screened ? (element >= w_max || rng_.uniform() * w_max < element)
                                 : rng_.uniform() < insertion_probability(strip.beta, n_cand, element, truncation, strip.n);
                    if (accept) {
                        op = candidate;
                        ++strip.n;
                        ++counters_.inserted;
                    }
                } else if (is_diagonal(op.kind)) {
                    const double element = diagonal_element(op, spins);
                    if (rng_.uniform() < removal_probability(strip.beta, n_cand, element, truncation, strip.n)) {
                        op = Operator{};
                        --strip.n;
                        ++counters_.removed;
                    }
                } else {
                    propagate(op, spins);
                }
            }
        }
    }

    /// Toggles measurement flags: measured -> unmeasured with P_split;
    /// unmeasured -> measured with P_merge when the spins on the two cuts of
    /// the level agree (otherwise the measured configuration has zero weight).
    void merge_split_update() {
        if (n_levels_ <= 0) return;
        const double p_merge = merge_probability(protocol_.p);
        const double p_split = split_probability(protocol_.p);
        fill_sheets(sheet_buffer_);
        for (int level = 1; level <= n_levels_; ++level) {
            const int8_t *bra = sheet_buffer_.data() + static_cast<size_t>(bra_cut(level)) * n_sites_;
            const int8_t *ket = sheet_buffer_.data() + static_cast<size_t>(ket_cut(level)) * n_sites_;
            for (int i = 0; i < n_sites_; ++i) {
                uint8_t &flag = flags_[flag_index(i, level)];
                if (flag) {
                    if (p_split > 0.0 && rng_.uniform() < p_split) {
                        flag = 0;
                        ++counters_.splits;
                    }
                } else if (bra[i] == ket[i] && p_merge > 0.0) {
                    if (rng_.uniform() < p_merge) {
                        flag = 1;
                        ++counters_.merges;
                    }
                }
            }
        }
    }

    /// Swendsen-Wang style nonlocal update over the whole ring. TFIM: clusters
    /// bounded by site operators, bond operators glue all four legs. CDHM:
    /// deterministic operator loops, each bond vertex pairs its two lower legs
    /// and its two upper legs. Measured levels join the segments crossing their
    /// two cuts. Every cluster flips with probability 1/2. Returns the number of
    /// trace-closure sites in the largest cluster.
    int nonlocal_update() {
        build_clusters();
        // Flip decisions, drawn in order of first appearance of each root.
        flip_.assign(uf_parent_.size(), -1);
        auto flip_of = [&](int leg) -> bool {
            const int r = find(leg);
            if (flip_[r] < 0) {
                flip_[r] = rng_.coin() ? 1 : 0;
                ++counters_.clusters;
            }
            return flip_[r] != 0;
        };
        int v = 0;
        for (StripString &strip : strips_) {
            for (Operator &op : strip.ops) {
                if (op.kind == OpKind::Null) continue;
                const int lo = vertex_lower_[v], up = vertex_upper_[v];
                ++v;
                if (lo == up) {
                    flip_of(lo);
                    continue;
                }
                if (flip_of(lo) != flip_of(up)) op.kind = toggled(op.kind);
            }
        }
        cluster_count_.assign(uf_parent_.size(), 0);
        int largest = 0;
        for (int i = 0; i < n_sites_; ++i) {
            const int leg = cut_leg_[i];  // segment crossing cut 0
            if (leg < 0) {
                if (rng_.coin()) top_spins_[i] = static_cast<int8_t>(-top_spins_[i]);
                ++counters_.clusters;
                largest = std::max(largest, 1);
                continue;
            }
            if (flip_of(leg)) top_spins_[i] = static_cast<int8_t>(-top_spins_[i]);
            largest = std::max(largest, ++cluster_count_[find(leg)]);
        }
        return largest;
    }

    /// Grows any strip whose filling exceeds 3/4, inserting nulls at random
    /// positions. Never shrinks.
    void adjust_truncation() {
        for (StripString &strip : strips_) {
            const int target = grown_truncation(strip.n, strip.truncation());
            while (strip.truncation() < target) {
                const auto pos = static_cast<std::ptrdiff_t>(rng_.below(static_cast<uint64_t>(strip.truncation()) + 1));
                strip.ops.insert(strip.ops.begin() + pos, Operator{});
            }
        }
    }

    SampleRecord measure(int largest_cluster_sites) const {
        SampleRecord rec;
        rec.m = observable_magnetization();
        rec.m_abs = std::abs(rec.m);
        rec.m2 = rec.m * rec.m;
        rec.m4 = rec.m2 * rec.m2;
        rec.flag_fraction = flag_fraction();
        rec.n_total = n_total();
        rec.largest_cluster = static_cast<double>(largest_cluster_sites) / n_sites_;
        return rec;
    }

    /// diagonal -> (truncation growth) -> merge/split -> nonlocal -> measure.
    SampleRecord sweep(bool adjust = false) {
        diagonal_update();
        if (adjust) adjust_truncation();
        merge_split_update();
        const int largest = nonlocal_update();
        ++sweeps_;
        if (debug_checks_) check_consistency();
        return measure(largest);
    }

    void set_debug_checks(bool on) { debug_checks_ = on; }

    // ---- diagnostics ----------------------------------------------------

    /// Log of the configuration weight; -inf for a forbidden configuration.
    double log_weight() const {
        constexpr double kNegInf = -std::numeric_limits<double>::infinity();
        double lw = 0.0;
        std::vector<int8_t> spins = top_spins_;
        std::vector<std::vector<int8_t>> sheets(n_strips());
        for (int j = 0; j < n_strips(); ++j) {
            const StripString &strip = strips_[j];
            sheets[j] = spins;
            const int m = strip.truncation();
            lw += strip.n * std::log(strip.beta) + std::lgamma(m - strip.n + 1.0) - std::lgamma(m + 1.0);
            for (const Operator &op : strip.ops) {
                if (op.kind == OpKind::Null) continue;
                const double w = element(op, spins);
                if (!(w > 0.0)) return kNegInf;
                lw += std::log(w);
                propagate(op, spins);
            }
        }
        if (spins != top_spins_) return kNegInf;
        for (int level = 1; level <= n_levels_; ++level) {
            for (int i = 0; i < n_sites_; ++i) {
                if (measured(i, level)) {
                    if (sheets[bra_cut(level)][i] != sheets[ket_cut(level)][i]) return kNegInf;
                    if (protocol_.p <= 0.0) return kNegInf;
                    lw += std::log(protocol_.p);
                } else {
                    if (protocol_.p >= 1.0) return kNegInf;
                    lw += std::log1p(-protocol_.p);
                }
            }
        }
        return lw;
    }

    /// Throws Error(Internal) on any broken invariant: operator counts,
    /// positive matrix elements, worldline closure, pinched spins.
    void check_consistency() const {
        std::vector<int8_t> spins = top_spins_;
        std::vector<std::vector<int8_t>> sheets(n_strips());
        for (int j = 0; j < n_strips(); ++j) {
            const StripString &strip = strips_[j];
            sheets[j] = spins;
            int count = 0;
            for (const Operator &op : strip.ops) {
                if (op.kind == OpKind::Null) continue;
                ++count;
                if (!(element(op, spins) > 0.0))
                    throw Error(ErrorKind::Internal, "operator with zero matrix element in strip " + std::to_string(j));
                propagate(op, spins);
            }
            if (count != strip.n) throw Error(ErrorKind::Internal, "operator count mismatch in strip " + std::to_string(j));
            if (strip.n > strip.truncation()) throw Error(ErrorKind::Internal, "n exceeds truncation");
        }
        if (spins != top_spins_) throw Error(ErrorKind::Internal, "worldlines do not close around the trace");
        for (int level = 1; level <= n_levels_; ++level)
            for (int i = 0; i < n_sites_; ++i)
                if (measured(i, level) && sheets[bra_cut(level)][i] != sheets[ket_cut(level)][i])
                    throw Error(ErrorKind::Internal, "measured pinch joins unequal spins");
    }

   private:
    size_t flag_index(int site, int level) const {
        return static_cast<size_t>(level - 1) * n_sites_ + static_cast<size_t>(site);
    }

    double diagonal_element(const Operator &op, const std::vector<int8_t> &spins) const {
        if (op.kind == OpKind::SiteDiag) return table_.site_diag;
        const Bond &bond = model_.lattice.bonds[op.loc];
        return table_.bonds[op.loc].diagonal(spins[bond.a], spins[bond.b]);
    }

    double element(const Operator &op, const std::vector<int8_t> &spins) const {
        switch (op.kind) {
            case OpKind::SiteDiag: return table_.site_diag;
            case OpKind::SiteFlip: return table_.site_flip;
            case OpKind::BondDiag: return diagonal_element(op, spins);
            case OpKind::BondExchange: {
                const Bond &bond = model_.lattice.bonds[op.loc];
                return spins[bond.a] != spins[bond.b] ? table_.bonds[op.loc].exchange : 0.0;
            }
            case OpKind::Null: return 1.0;
        }
        return 0.0;
    }

    void propagate(const Operator &op, std::vector<int8_t> &spins) const {
        if (op.kind == OpKind::SiteFlip) {
            spins[op.loc] = static_cast<int8_t>(-spins[op.loc]);
        } else if (op.kind == OpKind::BondExchange) {
            const Bond &bond = model_.lattice.bonds[op.loc];
            spins[bond.a] = static_cast<int8_t>(-spins[bond.a]);
            spins[bond.b] = static_cast<int8_t>(-spins[bond.b]);
        }
    }

    static OpKind toggled(OpKind k) {
        switch (k) {
            case OpKind::SiteDiag: return OpKind::SiteFlip;
            case OpKind::SiteFlip: return OpKind::SiteDiag;
            case OpKind::BondDiag: return OpKind::BondExchange;
            case OpKind::BondExchange: return OpKind::BondDiag;
            case OpKind::Null: return OpKind::Null;
        }
        return k;
    }

    int find(int x) {
        while (uf_parent_[x] != x) {
            uf_parent_[x] = uf_parent_[uf_parent_[x]];
            x = uf_parent_[x];
        }
        return x;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (uf_size_[a] < uf_size_[b]) std::swap(a, b);
        uf_parent_[b] = a;
        uf_size_[a] += uf_size_[b];
    }

    // Union-find over vertex nodes. A TFIM bond vertex is one node; site
    // vertices and Heisenberg bond vertices have a lower and an upper node.
    // Fills cut_leg_ with the node of the segment crossing every cut for
    // every site, -1 for sites without any operator.
    void build_clusters() {
        const long vertices = n_total();
        vertex_lower_.resize(vertices);
        vertex_upper_.resize(vertices);
        uf_parent_.resize(2 * vertices);
        last_leg_.assign(n_sites_, -1);
        first_leg_.assign(n_sites_, -1);
        cut_leg_.assign(static_cast<size_t>(n_strips()) * n_sites_, -1);

        int nodes = 0;
        auto attach = [&](int site, int lower, int upper) {
            if (last_leg_[site] >= 0)
                pending_.emplace_back(last_leg_[site], lower);
            else
                first_leg_[site] = lower;
            last_leg_[site] = upper;
        };
        pending_.clear();
        const bool heisenberg = model_.kind == ModelKind::Cdhm;
        int v = 0;
        for (int j = 0; j < n_strips(); ++j) {
            std::copy(last_leg_.begin(), last_leg_.end(), cut_leg_.begin() + static_cast<std::ptrdiff_t>(j) * n_sites_);
            for (const Operator &op : strips_[j].ops) {
                if (op.kind == OpKind::Null) continue;
                int lo, up;
                if (is_site_op(op.kind)) {
                    lo = nodes++;
                    up = nodes++;
                    attach(op.loc, lo, up);
                } else {
                    const Bond &bond = model_.lattice.bonds[op.loc];
                    lo = nodes++;
                    up = heisenberg ? nodes++ : lo;
                    attach(bond.a, lo, up);
                    attach(bond.b, lo, up);
                }
                vertex_lower_[v] = lo;
                vertex_upper_[v] = up;
                ++v;
            }
        }
        uf_parent_.resize(nodes);
        std::iota(uf_parent_.begin(), uf_parent_.end(), 0);
        uf_size_.assign(nodes, 1);
        for (const auto &[a, b] : pending_) unite(a, b);
        for (int i = 0; i < n_sites_; ++i)
            if (first_leg_[i] >= 0) unite(last_leg_[i], first_leg_[i]);
        // Segments crossing a cut before the site's first operator are the
        // wrap-around segment.
        for (int j = 0; j < n_strips(); ++j)
            for (int i = 0; i < n_sites_; ++i) {
                int &leg = cut_leg_[static_cast<size_t>(j) * n_sites_ + i];
                if (leg < 0) leg = last_leg_[i];
            }
        for (int level = 1; level <= n_levels_; ++level)
            for (int i = 0; i < n_sites_; ++i) {
                if (!measured(i, level) || last_leg_[i] < 0) continue;
                unite(cut_leg_[static_cast<size_t>(bra_cut(level)) * n_sites_ + i],
                      cut_leg_[static_cast<size_t>(ket_cut(level)) * n_sites_ + i]);
            }
    }

    ModelSpec model_;
    ProtocolParams protocol_;
    OperatorTable table_;
    Rng rng_;
    int n_sites_ = 0;
    int n_layers_ = 0;
    int n_levels_ = 0;
    std::vector<int> stagger_;
    std::vector<StripString> strips_;
    std::vector<uint8_t> flags_;
    std::vector<int8_t> top_spins_;
    MoveCounters counters_;
    uint64_t sweeps_ = 0;
    bool debug_checks_ = false;
    double max_diagonal_ = 0.0;

    // Scratch buffers reused across sweeps.
    mutable std::vector<int8_t> scratch_spins_;
    std::vector<int8_t> sheet_buffer_;
    std::vector<int> uf_parent_;
    std::vector<int> uf_size_;
    std::vector<int> last_leg_;
    std::vector<int> first_leg_;
    std::vector<int> cut_leg_;
    std::vector<int> vertex_lower_;
    std::vector<int> vertex_upper_;
    std::vector<std::pair<int, int>> pending_;
    std::vector<int8_t> flip_;
    std::vector<int> cluster_count_;
};

}  // namespace mdite
