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

// Chain scheduling: independent Markov chains over (point x chain) tasks on a
// fixed worker pool. Chain c of a point is seeded with stream_seed(seed, c),
// and results are merged in chain order, so output never depends on the
// number of workers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mdite/config.hpp"
#include "mdite/error.hpp"
#include "mdite/estimators.hpp"
#include "mdite/model.hpp"
#include "mdite/rng.hpp"
#include "mdite/sse.hpp"

namespace mdite::runner {

inline constexpr long kAutoEquilibration = 10000;

struct PointSpec {
    ModelSpec model;
    ProtocolParams protocol;
    config::SamplerBlock sampler;
    int L = 0;
    double field = 0.0;
};

inline PointSpec point_from_config(const config::RunConfig &cfg) {
    return PointSpec{config::build_model(cfg.model), config::build_protocol(cfg), cfg.sampler, cfg.model.L,
                     cfg.field()};
}

struct ChainResult {
    int chain = 0;
    uint64_t seed = 0;
    long equilibration = 0;
    long discarded = 0;  // extra leading samples dropped by the automatic rule
    stats::SampleSeries series;
    std::vector<long> n_total;
    MoveCounters counters;
    /// Mean of every measurement flag over kept samples, site-major per level.
    std::vector<double> flag_means;
};

struct PointResult {
    std::vector<ChainResult> chains;
    std::optional<stats::RunEstimates> estimates;
    std::string failure;
    int failed_chain = -1;
    ErrorKind failure_kind = ErrorKind::Internal;
};

/// A chain that hit a numeric or internal failure.
class ChainFailure : public Error {
  public:
    ChainFailure(int chain, ErrorKind kind, const std::string &msg)
        : Error(kind, "chain " + std::to_string(chain) + ": " + msg), chain_(chain) {}
    int chain() const { return chain_; }

  private:
    int chain_;
};

/// --threads when positive, else MDITE_THREADS, else the hardware count.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char *env = std::getenv("MDITE_THREADS")) {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
        throw Error(ErrorKind::Config, "MDITE_THREADS must be a positive integer, got \"" + std::string(env) + "\"");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline ChainResult run_chain(const PointSpec &spec, int chain) {
    ChainResult out;
    out.chain = chain;
    out.seed = stream_seed(spec.sampler.seed, static_cast<uint64_t>(chain));
    SseState state(spec.model, spec.protocol, out.seed);
    state.set_debug_checks(spec.sampler.debug_checks);
    const bool automatic = !spec.sampler.equilibration.has_value();
    out.equilibration = automatic ? kAutoEquilibration : *spec.sampler.equilibration;
    for (long s = 0; s < out.equilibration; ++s) state.sweep(true);

    const double n = spec.model.n_sites();
    const size_t n_flags = state.flags().size();
    std::vector<double> flag_sums(n_flags, 0.0);
    std::vector<SampleRecord> records;
    records.reserve(static_cast<size_t>(spec.sampler.sweeps));
    // Cumulative flag counts every kSnapshot sweeps, for trimming the head.
    constexpr long kSnapshot = 100;
    std::vector<std::vector<uint32_t>> flag_counts;
    std::vector<uint32_t> running(n_flags, 0);
    for (long s = 0; s < spec.sampler.sweeps; ++s) {
        SampleRecord r = state.sweep(true);
        r.m /= n;
        r.m_abs /= n;
        r.m2 = r.m * r.m;
        r.m4 = r.m2 * r.m2;
        records.push_back(r);
        const auto &flags = state.flags();
        for (size_t f = 0; f < n_flags; ++f) running[f] += flags[f];
        if (automatic && (s + 1) % kSnapshot == 0 && s < 4 * kAutoEquilibration) flag_counts.push_back(running);
    }

    if (automatic && records.size() >= 1000) {
        std::vector<double> m2(records.size());
        for (size_t i = 0; i < records.size(); ++i) m2[i] = records[i].m2;
        const double tau = stats::autocorrelation_time(m2);
        const long wanted = static_cast<long>(std::ceil(10.0 * tau));
        long extra = std::clamp<long>(wanted - out.equilibration, 0, static_cast<long>(records.size()) / 2);
        extra = (extra + kSnapshot - 1) / kSnapshot;
        extra = std::min<long>(extra, static_cast<long>(flag_counts.size()));
        out.discarded = extra * kSnapshot;
    }
    const size_t first = static_cast<size_t>(out.discarded);
    out.series.reserve(records.size() - first);
    out.n_total.reserve(records.size() - first);
    for (size_t i = first; i < records.size(); ++i) {
        out.series.push(records[i]);
        out.n_total.push_back(records[i].n_total);
    }
    const double kept = static_cast<double>(records.size() - first);
    out.flag_means.assign(n_flags, 0.0);
    for (size_t f = 0; f < n_flags; ++f) {
        const double head = first > 0 ? flag_counts[first / kSnapshot - 1][f] : 0.0;
        out.flag_means[f] = kept > 0 ? (running[f] - head) / kept : 0.0;
    }
    out.counters = state.counters();
    return out;
}

/// Runs every chain of every point on `threads` workers. A failing chain
/// marks its point as failed; other points continue.
inline std::vector<PointResult> run_points(const std::vector<PointSpec> &points, int threads) {
    std::vector<PointResult> results(points.size());
    struct Task {
        size_t point;
        int chain;
    };
    std::vector<Task> tasks;
    for (size_t p = 0; p < points.size(); ++p) {
        results[p].chains.resize(static_cast<size_t>(points[p].sampler.chains));
        for (int c = 0; c < points[p].sampler.chains; ++c) tasks.push_back({p, c});
    }
    std::atomic<size_t> next{0};
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            const size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            const Task task = tasks[t];
            {
                std::lock_guard<std::mutex> lock(mu);
                if (!results[task.point].failure.empty()) continue;
            }
            try {
                ChainResult r = run_chain(points[task.point], task.chain);
                std::lock_guard<std::mutex> lock(mu);
                results[task.point].chains[static_cast<size_t>(task.chain)] = std::move(r);
            } catch (const Error &e) {
                std::lock_guard<std::mutex> lock(mu);
                PointResult &pr = results[task.point];
                if (pr.failure.empty() || task.chain < pr.failed_chain) {
                    pr.failure = e.what();
                    pr.failed_chain = task.chain;
                    pr.failure_kind = e.kind();
                }
            } catch (const std::exception &e) {
                std::lock_guard<std::mutex> lock(mu);
                PointResult &pr = results[task.point];
                if (pr.failure.empty() || task.chain < pr.failed_chain) {
                    pr.failure = e.what();
                    pr.failed_chain = task.chain;
                    pr.failure_kind = ErrorKind::Internal;
                }
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto &th : pool) th.join();
    }

    for (size_t p = 0; p < points.size(); ++p) {
        PointResult &pr = results[p];
        if (!pr.failure.empty()) continue;
        try {
            std::vector<stats::SampleSeries> series;
            for (const auto &c : pr.chains) series.push_back(c.series);
            pr.estimates = stats::summarize(series, points[p].sampler.bin_size);
        } catch (const Error &e) {
            pr.failure = e.what();
            pr.failure_kind = e.kind();
        }
    }
    return results;
}

/// Single point; throws ChainFailure when any chain fails.
inline PointResult run_point(const PointSpec &spec, int threads) {
    PointResult r = std::move(run_points({spec}, threads).front());
    if (!r.failure.empty()) {
        if (r.failed_chain >= 0) throw ChainFailure(r.failed_chain, r.failure_kind, r.failure);
        throw Error(r.failure_kind, r.failure);
    }
    return r;
}

}  // namespace mdite::runner
