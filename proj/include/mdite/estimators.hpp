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

// Binning, jackknife and autocorrelation analysis of Monte Carlo time series.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mdite/error.hpp"
#include "mdite/sse.hpp"

namespace mdite::stats {

enum class ErrorMethod { Binning, Jackknife };

inline const char *method_name(ErrorMethod m) { return m == ErrorMethod::Binning ? "binning" : "jackknife"; }

struct EstimateWithError {
    double mean = 0.0;
    double error = 0.0;
    ErrorMethod method = ErrorMethod::Binning;
    double tau_int = 0.5;
};

/// Count, mean and centred second moment; merge() is associative (Chan et al.)
/// up to floating-point reordering.
struct MomentAccumulator {
    long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    MomentAccumulator &merge(const MomentAccumulator &o) {
        if (o.count == 0) return *this;
        if (count == 0) return *this = o;
        const double n = static_cast<double>(count + o.count);
        const double delta = o.mean - mean;
        mean += delta * static_cast<double>(o.count) / n;
        m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / n;
        count += o.count;
        return *this;
    }

    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
};

/// Sample channels recorded once per sweep.
enum Channel : int { kM = 0, kMAbs, kM2, kM4, kFlagFraction, kCluster, kChannelCount };

inline constexpr std::array<const char *, kChannelCount> kChannelNames = {"m",         "m_abs",       "m2",
                                                                          "m4",        "flag_frac",   "cluster_frac"};

struct SampleSeries {
    std::array<std::vector<double>, kChannelCount> channel;

    void reserve(size_t n) {
        for (auto &c : channel) c.reserve(n);
    }
    void push(const SampleRecord &r) {
        channel[kM].push_back(r.m);
        channel[kMAbs].push_back(r.m_abs);
        channel[kM2].push_back(r.m2);
        channel[kM4].push_back(r.m4);
        channel[kFlagFraction].push_back(r.flag_fraction);
        channel[kCluster].push_back(r.largest_cluster);
    }
    size_t size() const { return channel[0].size(); }
};

/// Non-overlapping bins of `bin_size` consecutive samples. A trailing partial
/// bin is dropped.
struct BinSeries {
    int bin_size = 1;
    long sample_count = 0;
    std::vector<std::vector<double>> means;  // [channel][bin]

    size_t n_channels() const { return means.size(); }
    size_t n_bins() const { return means.empty() ? 0 : means[0].size(); }

    static BinSeries from_channels(const std::vector<std::span<const double>> &channels, int bin_size) {
        if (bin_size < 1) throw Error(ErrorKind::Contract, "bin size must be >= 1");
        BinSeries out;
        out.bin_size = bin_size;
        out.means.resize(channels.size());
        for (size_t c = 0; c < channels.size(); ++c) {
            const auto &x = channels[c];
            const size_t bins = x.size() / static_cast<size_t>(bin_size);
            out.means[c].resize(bins);
            for (size_t b = 0; b < bins; ++b) {
                double s = 0.0;
                for (int k = 0; k < bin_size; ++k) s += x[b * bin_size + k];
                out.means[c][b] = s / bin_size;
            }
            if (c == 0) out.sample_count = static_cast<long>(bins) * bin_size;
        }
        return out;
    }

    static BinSeries from_series(const SampleSeries &series, int bin_size) {
        std::vector<std::span<const double>> views;
        for (const auto &c : series.channel) views.emplace_back(c);
        return from_channels(views, bin_size);
    }

    /// Appends the bins of an independent chain with the same bin size.
    void append(const BinSeries &other) {
        if (means.empty()) {
            *this = other;
            return;
        }
        if (other.bin_size != bin_size || other.n_channels() != n_channels())
            throw Error(ErrorKind::Contract, "cannot merge bin series with different layouts");
        for (size_t c = 0; c < means.size(); ++c)
            means[c].insert(means[c].end(), other.means[c].begin(), other.means[c].end());
        sample_count += other.sample_count;
    }
};

inline EstimateWithError binning_estimate(std::span<const double> bin_means) {
    if (bin_means.size() < 2) throw Error(ErrorKind::DegenerateData, "need at least two bins for an error estimate");
    MomentAccumulator acc;
    for (double x : bin_means) acc.add(x);
    return {acc.mean, std::sqrt(acc.variance() / static_cast<double>(acc.count)), ErrorMethod::Binning, 0.5};
}

/// Jackknife over bins of f(channel means). f receives the per-channel means
/// of one leave-one-out replicate.
inline EstimateWithError jackknife(const BinSeries &bins,
                                   const std::function<double(std::span<const double>)> &f) {
    const size_t n = bins.n_bins();
    if (n < 2) throw Error(ErrorKind::DegenerateData, "need at least two bins for a jackknife");
    const size_t nc = bins.n_channels();
    std::vector<double> total(nc, 0.0), replicate(nc);
    for (size_t c = 0; c < nc; ++c)
        for (double x : bins.means[c]) total[c] += x;
    std::vector<double> full(nc);
    for (size_t c = 0; c < nc; ++c) full[c] = total[c] / static_cast<double>(n);
    std::vector<double> values(n);
    for (size_t b = 0; b < n; ++b) {
        for (size_t c = 0; c < nc; ++c) replicate[c] = (total[c] - bins.means[c][b]) / static_cast<double>(n - 1);
        values[b] = f(replicate);
    }
    const double mean_rep = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean_rep) * (v - mean_rep);
    var *= static_cast<double>(n - 1) / static_cast<double>(n);
    // Bias-corrected estimate.
    const double est = static_cast<double>(n) * f(full) - static_cast<double>(n - 1) * mean_rep;
    return {est, std::sqrt(var), ErrorMethod::Jackknife, 0.5};
}

/// R2 = <m^4> / <m^2>^2 by jackknife over bins; the ratio is formed in every
/// leave-one-out replicate.
inline EstimateWithError binder_ratio(const BinSeries &bins, size_t m2_channel, size_t m4_channel) {
    if (bins.n_bins() < 8) throw Error(ErrorKind::DegenerateData, "Binder ratio needs at least 8 bins");
    return jackknife(bins, [&](std::span<const double> mean) {
        if (!(mean[m2_channel] > 0.0)) throw Error(ErrorKind::DegenerateData, "<m^2> replicate is not positive");
        return mean[m4_channel] / (mean[m2_channel] * mean[m2_channel]);
    });
}

inline EstimateWithError binder_ratio(const BinSeries &bins) { return binder_ratio(bins, kM2, kM4); }

/// Integrated autocorrelation time with Sokal's self-consistent window
/// W >= 6 tau_int(W). A constant series returns 0.5.
inline double autocorrelation_time(std::span<const double> x) {
    const size_t n = x.size();
    if (n < 1000) throw Error(ErrorKind::DegenerateData, "autocorrelation analysis needs >= 1000 samples");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double c0 = 0.0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    c0 /= static_cast<double>(n);
    if (!(c0 > 1e-300 * (1.0 + mean * mean))) return 0.5;
    double tau = 0.5;
    const size_t max_lag = n / 2;
    for (size_t t = 1; t < max_lag; ++t) {
        double ct = 0.0;
        for (size_t i = 0; i + t < n; ++i) ct += (x[i] - mean) * (x[i + t] - mean);
        ct /= static_cast<double>(n - t);
        tau += ct / c0;
        if (static_cast<double>(t) >= 6.0 * tau) break;
    }
    return std::max(tau, 0.5);
}

inline int default_bin_size(double tau_int) {
    return std::max(64, static_cast<int>(std::ceil(8.0 * tau_int)));
}

/// Per-point summary of a run (one or many independent chains).
struct RunEstimates {
    EstimateWithError m;
    EstimateWithError m_abs;
    EstimateWithError m2;
    EstimateWithError m4;
    EstimateWithError binder;
    EstimateWithError flag_fraction;
    EstimateWithError cluster;
    double tau_int = 0.5;
    int bin_size = 0;
    long samples = 0;
};

/// Bins every chain with a common bin size (chosen from the largest
/// autocorrelation time of |m| and m^2 over chains unless given) and
/// estimates all channels.
inline RunEstimates summarize(const std::vector<SampleSeries> &chains, int bin_size = 0) {
    if (chains.empty()) throw Error(ErrorKind::DegenerateData, "no chains to summarize");
    double tau = 0.5;
    for (const auto &c : chains) {
        if (c.size() >= 1000) {
            tau = std::max(tau, autocorrelation_time(c.channel[kMAbs]));
            tau = std::max(tau, autocorrelation_time(c.channel[kM2]));
        }
    }
    if (bin_size <= 0) bin_size = default_bin_size(tau);
    BinSeries bins;
    for (const auto &c : chains) bins.append(BinSeries::from_series(c, bin_size));
    RunEstimates out;
    auto channel = [&](int ch) {
        EstimateWithError e = binning_estimate(bins.means[ch]);
        e.tau_int = tau;
        return e;
    };
    out.m = channel(kM);
    out.m_abs = channel(kMAbs);
    out.m2 = channel(kM2);
    out.m4 = channel(kM4);
    out.flag_fraction = channel(kFlagFraction);
    out.cluster = channel(kCluster);
    out.binder = binder_ratio(bins);
    out.binder.tau_int = tau;
    out.tau_int = tau;
    out.bin_size = bin_size;
    out.samples = bins.sample_count;
    return out;
}

// ---- convergence with circuit depth ------------------------------------

struct DepthRecord {
    int n_layers = 0;
    std::map<std::string, EstimateWithError> values;
};

struct ObservableConvergence {
    std::string observable;
    bool converged = false;
    int recommended_depth = -1;  // -1 when undetermined
};

struct ConvergenceReport {
    std::vector<ObservableConvergence> observables;
    /// Largest recommended depth over observables, -1 if any is undetermined.
    int recommended_depth = -1;
};

/// Consecutive depths agree when |a - b| <= 2 sqrt(sa^2 + sb^2) + abs_tol. An
/// observable is converged when the last two consecutive pairs agree; the
/// recommended depth is the smallest depth from which every later pair agrees.
inline ConvergenceReport stationarity_scan(std::vector<DepthRecord> records, double abs_tol = 0.0) {
    if (records.size() < 3) throw Error(ErrorKind::DegenerateData, "stationarity scan needs at least 3 depths");
    std::sort(records.begin(), records.end(),
              [](const DepthRecord &a, const DepthRecord &b) { return a.n_layers < b.n_layers; });
    ConvergenceReport report;
    bool all = true;
    int worst = 0;
    for (const auto &[name, unused] : records.front().values) {
        const size_t n = records.size();
        std::vector<bool> agree(n - 1);
        for (size_t i = 0; i + 1 < n; ++i) {
            const auto &a = records[i].values.at(name);
            const auto &b = records[i + 1].values.at(name);
            agree[i] = std::abs(a.mean - b.mean) <= 2.0 * std::hypot(a.error, b.error) + abs_tol;
        }
        ObservableConvergence oc{name, agree[n - 2] && agree[n - 3], -1};
        if (oc.converged) {
            size_t start = n - 2;
            while (start > 0 && agree[start - 1]) --start;
            oc.recommended_depth = records[start].n_layers;
            worst = std::max(worst, oc.recommended_depth);
        } else {
            all = false;
        }
        report.observables.push_back(oc);
    }
    report.recommended_depth = all ? worst : -1;
    return report;
}

// ---- two-sample tests --------------------------------------------------

struct MannWhitneyResult {
    double u = 0.0;
    double z = 0.0;
    double p_greater = 1.0;  // one-sided: P-value for "b stochastically larger than a"
};

/// Mann-Whitney U with mid-ranks and the normal approximation (tie-corrected).
inline MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b) {
    const size_t na = a.size(), nb = b.size();
    if (na < 2 || nb < 2) throw Error(ErrorKind::DegenerateData, "Mann-Whitney needs >= 2 samples per group");
    std::vector<std::pair<double, int>> all;
    all.reserve(na + nb);
    for (double x : a) all.emplace_back(x, 0);
    for (double x : b) all.emplace_back(x, 1);
    std::sort(all.begin(), all.end());
    const double n = static_cast<double>(na + nb);
    double rank_b = 0.0, tie_term = 0.0;
    for (size_t i = 0; i < all.size();) {
        size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        const double mid = 0.5 * static_cast<double>(i + j + 1);  // ranks i+1..j
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (size_t k = i; k < j; ++k)
            if (all[k].second == 1) rank_b += mid;
        i = j;
    }
    MannWhitneyResult out;
    out.u = rank_b - static_cast<double>(nb) * (static_cast<double>(nb) + 1.0) / 2.0;
    const double mean_u = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
    const double var_u = static_cast<double>(na) * static_cast<double>(nb) / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var_u <= 0.0) return out;
    out.z = (out.u - mean_u) / std::sqrt(var_u);
    out.p_greater = 0.5 * std::erfc(out.z / std::sqrt(2.0));
    return out;
}

/// |a - b| / sqrt(sa^2 + sb^2); 0 when both errors vanish and values agree.
inline double z_score(double a, double sa, double b, double sb) {
    const double s = std::hypot(sa, sb);
    if (s == 0.0) return a == b ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(a - b) / s;
}

}  // namespace mdite::stats
