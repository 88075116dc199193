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

// Subcommand implementations behind the mdite executable. Each returns a
// process exit code: 0 success, 1 unexpected failure, 2 invalid config or
// input schema, 3 numeric failure.

#include <Eigen/Core>
#include <gsl/gsl_version.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "mdite/analysis.hpp"
#include "mdite/config.hpp"
#include "mdite/error.hpp"
#include "mdite/estimators.hpp"
#include "mdite/io.hpp"
#include "mdite/oracle.hpp"
#include "mdite/runner.hpp"

namespace mdite::commands {

inline constexpr const char *kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kFailure = 1, kInvalid = 2, kNumeric = 3 };

struct Options {
    std::string config_path;
    std::optional<uint64_t> seed;
    int threads = 0;
    std::optional<std::string> out;
    std::optional<std::string> in;
    bool quiet = false;
};

using nlohmann::json;
namespace fs = std::filesystem;

namespace detail {

inline std::string now_iso() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json versions() {
    std::ostringstream eigen;
    eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
    return json{{"mdite", kVersion},
                {"compiler", __VERSION__},
                {"cplusplus", static_cast<long>(__cplusplus)},
                {"eigen", eigen.str()},
                {"gsl", GSL_VERSION},
                {"tomlplusplus", std::to_string(TOML_LIB_MAJOR) + "." + std::to_string(TOML_LIB_MINOR) + "." +
                                     std::to_string(TOML_LIB_PATCH)}};
}

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline fs::path output_dir(const config::RunConfig &cfg, const Options &opt) {
    fs::path dir = opt.out ? fs::path(*opt.out) : fs::path(cfg.output.directory);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Config, "cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

inline config::RunConfig load(const Options &opt) {
    config::RunConfig cfg = config::load_config(opt.config_path);
    if (opt.seed) cfg.sampler.seed = *opt.seed;
    return cfg;
}

inline json chain_json(const runner::ChainResult &c) {
    return json{{"chain", c.chain},
                {"seed", c.seed},
                {"equilibration", c.equilibration},
                {"discarded", c.discarded},
                {"samples", c.series.size()},
                {"counters",
                 {{"inserted", c.counters.inserted},
                  {"removed", c.counters.removed},
                  {"merges", c.counters.merges},
                  {"splits", c.counters.splits},
                  {"clusters", c.counters.clusters}}}};
}

inline void write_manifest(const fs::path &dir, const std::string &command, const config::RunConfig &cfg,
                           json extra, const std::string &started, double wall) {
    json m;
    m["command"] = command;
    m["config_source"] = cfg.source;
    m["config"] = json::parse(config::config_as_json(cfg));
    m["seed"] = cfg.sampler.seed;
    m["versions"] = versions();
    for (auto &[k, v] : extra.items()) m[k] = v;
    m["started_at"] = started;
    m["finished_at"] = now_iso();
    m["wall_time_seconds"] = wall;
    io::write_file((dir / "manifest.json").string(), m.dump(2) + "\n");
}

/// Runs `body` and maps library errors onto exit codes.
template <class F>
int guarded(const char *command, F &&body) {
    try {
        return body();
    } catch (const runner::ChainFailure &e) {
        std::cerr << "mdite " << command << ": numeric failure in " << e.what() << "\n";
        return kNumeric;
    } catch (const Error &e) {
        std::cerr << "mdite " << command << ": " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::Config:
            case ErrorKind::Schema:
            case ErrorKind::Capacity:
            case ErrorKind::InvalidSize:
            case ErrorKind::UnsupportedModel:
            case ErrorKind::Shape:
                return kInvalid;
            case ErrorKind::Numeric:
            case ErrorKind::Convergence:
                return kNumeric;
            default:
                return kFailure;
        }
    } catch (const std::exception &e) {
        std::cerr << "mdite " << command << ": " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace detail

// ---- run -----------------------------------------------------------------

inline int cmd_run(const Options &opt) {
    return detail::guarded("run", [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const std::string started = detail::now_iso();
        const config::RunConfig cfg = detail::load(opt);
        const runner::PointSpec spec = runner::point_from_config(cfg);
        const fs::path dir = detail::output_dir(cfg, opt);
        const int threads = runner::resolve_threads(opt.threads);
        const runner::PointResult res = runner::run_point(spec, threads);

        const bool csv = cfg.output.has_format("csv");
        if (csv && cfg.output.samples.value_or(true))
            for (const auto &c : res.chains)
                io::write_samples((dir / ("samples-" + std::to_string(c.chain) + ".csv")).string(), c);
        if (csv) io::write_estimates((dir / "estimates.csv").string(), {io::make_row(spec, *res.estimates)});
        if (cfg.output.has_format("json")) {
            json chains = json::array();
            for (const auto &c : res.chains) chains.push_back(detail::chain_json(c));
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            detail::write_manifest(dir, "run", cfg,
                                   json{{"n_d", spec.protocol.n_layers},
                                        {"bin_size", res.estimates->bin_size},
                                        {"chains", chains}},
                                   started, wall);
        }
        if (!opt.quiet) {
            const auto &e = *res.estimates;
            std::cout << "R2 = " << e.binder.mean << " +- " << e.binder.error << "  m2 = " << e.m2.mean << " +- "
                      << e.m2.error << "  tau_int = " << e.tau_int << "\n";
        }
        return int{kOk};
    });
}

// ---- oracle --------------------------------------------------------------

inline int cmd_oracle(const Options &opt) {
    return detail::guarded("oracle", [&] {
        const config::RunConfig cfg = detail::load(opt);
        const ModelSpec model = config::build_model(cfg.model);
        ProtocolParams protocol = config::build_protocol(cfg);
        oracle::check_capacity(model, cfg.oracle.cap);

        oracle::DenseState state;
        int iterations = 0;
        double residual = 0.0;
        bool converged = true;
        if (cfg.oracle.stationary) {
            const auto st = oracle::iterate_to_stationary(model, protocol, cfg.oracle.tol, cfg.oracle.max_iterations,
                                                          cfg.oracle.cap);
            state = st.state;
            iterations = st.iterations;
            residual = st.residual;
            converged = st.converged;
            protocol.n_layers = iterations;
        } else {
            ProtocolParams previous = protocol;
            previous.n_layers = protocol.n_layers - 1;
            state = oracle::evolve(model, protocol, cfg.oracle.cap).state;
            const oracle::DenseState before =
                previous.n_layers >= 1 ? oracle::evolve(model, previous, cfg.oracle.cap).state
                                       : oracle::DenseState::maximally_mixed(model.n_sites());
            iterations = protocol.n_layers;
            residual = oracle::trace_distance(state.rho, before.rho);
        }
        const oracle::ExactObservables obs = oracle::exact_observables(state, model);
        const double n = model.n_sites();
        json out;
        out["params"] = {{"model", model_name(model.kind)},
                         {"n_sites", model.n_sites()},
                         {"L", cfg.model.L},
                         {"tau", protocol.tau},
                         {"h_or_g", cfg.field()},
                         {"J", cfg.model.J},
                         {"p", protocol.p},
                         {"n_d", protocol.n_layers}};
        out["observables"] = {{"m", obs.m_mean / n},
                              {"m_abs", obs.m_abs / n},
                              {"m2", obs.m2 / (n * n)},
                              {"m4", obs.m4 / (n * n * n * n)},
                              {"R2", obs.binder}};
        out["iterations"] = iterations;
        out["residual"] = residual;
        out["converged"] = converged;
        if (cfg.oracle.marginals) {
            const Eigen::MatrixXd marg = oracle::flag_marginals(model, protocol, cfg.oracle.cap);
            json table = json::array();
            for (Eigen::Index i = 0; i < marg.rows(); ++i) {
                json row = json::array();
                for (Eigen::Index k = 0; k < marg.cols(); ++k) row.push_back(marg(i, k));
                table.push_back(row);
            }
            out["flag_marginals"] = table;
        }
        const std::string text = out.dump(2) + "\n";
        if (opt.out) {
            const fs::path dir = detail::output_dir(cfg, opt);
            io::write_file((dir / "oracle.json").string(), text);
        }
        if (!opt.quiet) std::cout << text;
        return int{kOk};
    });
}

// ---- scan ----------------------------------------------------------------

struct ScanPoint {
    runner::PointSpec spec;
    double axis_value = 0.0;
};

/// Grid = fixed grids x sizes x axis values, in that nesting order.
inline std::vector<ScanPoint> scan_points(const config::RunConfig &cfg) {
    if (!cfg.scan) throw Error(ErrorKind::Config, cfg.source + ":1: scan needs a [scan] table");
    const config::ScanBlock &sc = *cfg.scan;
    const std::vector<double> taus = sc.tau_grid.empty() ? std::vector<double>{cfg.protocol.tau} : sc.tau_grid;
    const std::vector<double> fields = sc.field_grid.empty() ? std::vector<double>{cfg.field()} : sc.field_grid;
    const std::vector<double> ps = sc.p_grid.empty() ? std::vector<double>{cfg.protocol.p} : sc.p_grid;
    std::vector<ScanPoint> out;
    for (double tau : taus)
        for (double field : fields)
            for (double p : ps)
                for (int L : sc.sizes)
                    for (double v : sc.values) {
                        config::RunConfig c = cfg;
                        c.protocol.tau = tau;
                        c.protocol.p = p;
                        if (c.model.kind == ModelKind::Tfim)
                            c.model.h = field;
                        else
                            c.model.g = field;
                        if (c.model.lattice != "explicit") {
                            c.model.L = L;
                            if (c.model.lattice == "columnar") c.model.ly = 0;
                        }
                        if (sc.axis == "p") c.protocol.p = v;
                        if (sc.axis == "tau") c.protocol.tau = v;
                        if (sc.axis == "h") c.model.h = v;
                        if (sc.axis == "g") c.model.g = v;
                        if (sc.axis == "n_d") c.protocol.n_d = static_cast<int>(v);
                        out.push_back({runner::point_from_config(c), v});
                    }
    return out;
}

inline int cmd_scan(const Options &opt) {
    return detail::guarded("scan", [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const std::string started = detail::now_iso();
        const config::RunConfig cfg = detail::load(opt);
        const std::vector<ScanPoint> grid = scan_points(cfg);
        const fs::path dir = detail::output_dir(cfg, opt);
        const int threads = runner::resolve_threads(opt.threads);

        std::vector<runner::PointSpec> specs;
        for (const auto &g : grid) specs.push_back(g.spec);
        const std::vector<runner::PointResult> results = runner::run_points(specs, threads);

        std::vector<io::EstimateRow> rows;
        std::string failures = "L,tau,h_or_g,p,n_d,chain,error\n";
        int n_failed = 0;
        json points = json::array();
        for (size_t i = 0; i < grid.size(); ++i) {
            const runner::PointSpec &s = grid[i].spec;
            const runner::PointResult &r = results[i];
            if (!r.failure.empty()) {
                ++n_failed;
                std::string msg = r.failure;
                for (char &ch : msg)
                    if (ch == ',' || ch == '\n') ch = ';';
                failures += std::to_string(s.L) + "," + io::fmt(s.protocol.tau) + "," + io::fmt(s.field) + "," +
                            io::fmt(s.protocol.p) + "," + std::to_string(s.protocol.n_layers) + "," +
                            std::to_string(r.failed_chain) + "," + msg + "\n";
                continue;
            }
            rows.push_back(io::make_row(s, *r.estimates));
            json chains = json::array();
            for (const auto &c : r.chains) chains.push_back(detail::chain_json(c));
            points.push_back({{"L", s.L},
                              {"tau", s.protocol.tau},
                              {"h_or_g", s.field},
                              {"p", s.protocol.p},
                              {"n_d", s.protocol.n_layers},
                              {"chains", chains}});
            if (cfg.output.samples.value_or(false) && cfg.output.has_format("csv"))
                for (const auto &c : r.chains) {
                    std::ostringstream name;
                    name << "samples-L" << s.L << "-" << cfg.scan->axis << io::fmt(grid[i].axis_value) << "-"
                         << c.chain << ".csv";
                    io::write_samples((dir / name.str()).string(), c);
                }
        }
        io::write_estimates((dir / "scan.csv").string(), rows);
        if (n_failed) io::write_file((dir / "scan_failures.csv").string(), failures);

        if (cfg.scan->axis == "n_d") {
            // Convergence with depth for every (L, fixed parameters) group.
            std::string conv = "model,L,tau,h_or_g,p,observable,converged,recommended_n_d\n";
            std::map<std::tuple<int, double, double, double>, std::vector<stats::DepthRecord>> groups;
            for (size_t i = 0, k = 0; i < grid.size(); ++i) {
                if (!results[i].failure.empty()) continue;
                const io::EstimateRow &row = rows[k++];
                stats::DepthRecord rec;
                rec.n_layers = row.n_d;
                const auto &e = *results[i].estimates;
                rec.values = {{"m_abs", e.m_abs}, {"m2", e.m2}, {"m4", e.m4}, {"R2", e.binder}};
                groups[{row.L, row.tau, row.h_or_g, row.p}].push_back(rec);
            }
            for (const auto &[key, recs] : groups) {
                if (recs.size() < 3) continue;
                const auto rep = stats::stationarity_scan(recs);
                for (const auto &o : rep.observables)
                    conv += std::string(model_name(cfg.model.kind)) + "," + std::to_string(std::get<0>(key)) + "," +
                            io::fmt(std::get<1>(key)) + "," + io::fmt(std::get<2>(key)) + "," +
                            io::fmt(std::get<3>(key)) + "," + o.observable + "," + (o.converged ? "true" : "false") +
                            "," + std::to_string(o.recommended_depth) + "\n";
            }
            io::write_file((dir / "convergence.csv").string(), conv);
        }
        if (cfg.output.has_format("json")) {
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            detail::write_manifest(dir, "scan", cfg,
                                   json{{"axis", cfg.scan->axis}, {"failed_points", n_failed}, {"points", points}},
                                   started, wall);
        }
        if (!opt.quiet)
            std::cout << "scan: " << rows.size() << " points written, " << n_failed << " failed\n";
        return int{kOk};
    });
}

// ---- analysis commands ---------------------------------------------------

struct Group {
    std::string model;
    std::string axis;
    double tau = std::nan("");
    double field = std::nan("");
    double p = std::nan("");
    std::vector<analysis::Curve> curves;
    std::vector<analysis::Curve> order_curves;  // observable for the collapse
};

inline double axis_of(const io::EstimateRow &r, const std::string &axis) {
    if (axis == "p") return r.p;
    if (axis == "tau") return r.tau;
    if (axis == "n_d") return r.n_d;
    return r.h_or_g;
}

/// The scanned axis: from [scan] when present, else the single column among
/// tau, h_or_g, p that varies within one size.
inline std::string infer_axis(const config::RunConfig &cfg, const std::vector<io::EstimateRow> &rows) {
    if (cfg.scan) return cfg.scan->axis;
    std::map<int, std::vector<const io::EstimateRow *>> by_L;
    for (const auto &r : rows) by_L[r.L].push_back(&r);
    std::vector<std::string> varying;
    for (const char *col : {"tau", "h_or_g", "p"}) {
        bool differs = false;
        for (const auto &[L, rs] : by_L)
            for (const auto *r : rs) differs = differs || axis_of(*r, col) != axis_of(*rs.front(), col);
        if (differs) varying.push_back(col);
    }
    if (varying.size() != 1)
        throw io::SchemaError("cannot infer the scanned axis from the input; add a [scan] table with axis");
    return varying.front() == "h_or_g" ? (rows.front().model == "tfim" ? "h" : "g") : varying.front();
}

inline std::vector<Group> group_rows(const std::vector<io::EstimateRow> &rows, const std::string &axis,
                                     const std::string &observable) {
    std::map<std::tuple<std::string, double, double, double>, std::map<int, std::vector<const io::EstimateRow *>>>
        tree;
    for (const auto &r : rows) {
        const double nan = std::nan("");
        const double tau = axis == "tau" ? nan : r.tau;
        const double field = (axis == "h" || axis == "g") ? nan : r.h_or_g;
        const double p = axis == "p" ? nan : r.p;
        // NaN keys compare unequal; substitute a sentinel for grouping.
        auto key = [](double v) { return std::isnan(v) ? -1e300 : v; };
        tree[{r.model, key(tau), key(field), key(p)}][r.L].push_back(&r);
    }
    std::vector<Group> out;
    for (const auto &[key, by_L] : tree) {
        Group g;
        g.model = std::get<0>(key);
        g.axis = axis;
        auto unkey = [](double v) { return v == -1e300 ? std::nan("") : v; };
        g.tau = unkey(std::get<1>(key));
        g.field = unkey(std::get<2>(key));
        g.p = unkey(std::get<3>(key));
        for (const auto &[L, rs] : by_L) {
            analysis::Curve binder{static_cast<double>(L), {}}, order{static_cast<double>(L), {}};
            for (const auto *r : rs) {
                binder.points.push_back({axis_of(*r, axis), r->R2, r->R2_err});
                if (observable == "m2")
                    order.points.push_back({axis_of(*r, axis), r->m2, r->m2_err});
                else
                    order.points.push_back({axis_of(*r, axis), r->m_abs, r->m_abs_err});
            }
            auto by_x = [](const analysis::CurvePoint &a, const analysis::CurvePoint &b) { return a.x < b.x; };
            std::sort(binder.points.begin(), binder.points.end(), by_x);
            std::sort(order.points.begin(), order.points.end(), by_x);
            g.curves.push_back(binder);
            g.order_curves.push_back(order);
        }
        out.push_back(g);
    }
    return out;
}

inline std::string input_path(const config::RunConfig &cfg, const Options &opt) {
    if (opt.in) return *opt.in;
    fs::path p(cfg.analysis.input);
    if (p.is_relative()) {
        const fs::path beside = fs::path(cfg.source).parent_path() / p;
        if (fs::exists(beside)) return beside.string();
    }
    return p.string();
}

inline analysis::CrossingOptions crossing_options(const config::RunConfig &cfg) {
    analysis::CrossingOptions o;
    o.bootstrap = cfg.analysis.bootstrap;
    o.seed = cfg.analysis.seed;
    o.local_points = cfg.analysis.local_points;
    return o;
}

inline std::string fixed_cells(const Group &g) {
    return g.model + "," + g.axis + "," + io::fmt(g.tau) + "," + io::fmt(g.field) + "," + io::fmt(g.p);
}

inline int cmd_crossing(const Options &opt) {
    return detail::guarded("crossing", [&] {
        const config::RunConfig cfg = detail::load(opt);
        const auto rows = io::read_estimates_file(input_path(cfg, opt));
        const std::string axis = infer_axis(cfg, rows);
        const fs::path dir = detail::output_dir(cfg, opt);
        std::string csv = "model,axis,tau,h_or_g,p,kind,L1,L2,crossing,crossing_err,note\n";
        for (const Group &g : group_rows(rows, axis, cfg.analysis.observable)) {
            try {
                const auto ca = analysis::find_binder_crossing(g.curves, crossing_options(cfg));
                for (const auto &r : ca.pairs)
                    csv += fixed_cells(g) + ",pair," + io::fmt(r.L1) + "," + io::fmt(r.L2) + "," +
                           io::fmt(r.crossing) + "," + io::fmt(r.error) + ",\n";
                for (const auto &f : ca.failures)
                    csv += fixed_cells(g) + ",no-crossing," + io::fmt(f.L1) + "," + io::fmt(f.L2) + ",nan,nan," +
                           f.reason + "\n";
                if (ca.extrapolated) {
                    csv += fixed_cells(g) + ",extrapolated,inf,inf," + io::fmt(ca.extrapolated->value) + "," +
                           io::fmt(ca.extrapolated->error) + "," + ca.extrapolated->method + "\n";
                    if (!opt.quiet)
                        std::cout << "crossing (" << g.axis << "): " << ca.extrapolated->value << " +- "
                                  << ca.extrapolated->error << "\n";
                }
            } catch (const Error &e) {
                csv += fixed_cells(g) + ",no-crossing,nan,nan,nan,nan," + std::string(e.what()) + "\n";
            }
        }
        io::write_file((dir / "crossings.csv").string(), csv);
        return int{kOk};
    });
}

inline json fit_json(const analysis::CollapseFit &f, double exponent_scale) {
    return json{{"x_c", f.x_c},
                {"x_c_err", f.x_c_err},
                {"nu", f.nu},
                {"nu_err", f.nu_err},
                {"beta", f.beta / exponent_scale},
                {"beta_err", f.beta_err / exponent_scale},
                {"beta_over_nu", f.beta_over_nu / exponent_scale},
                {"beta_over_nu_err", f.beta_over_nu_err / exponent_scale},
                {"cost", f.cost},
                {"converged", f.converged},
                {"L_min", f.L_min},
                {"n_sizes", f.n_sizes},
                {"n_points", f.n_points}};
}

inline int cmd_collapse(const Options &opt) {
    return detail::guarded("collapse", [&] {
        const config::RunConfig cfg = detail::load(opt);
        const auto rows = io::read_estimates_file(input_path(cfg, opt));
        const std::string axis = infer_axis(cfg, rows);
        const fs::path dir = detail::output_dir(cfg, opt);
        // <m^2> scales with twice the order-parameter exponent.
        const double scale = cfg.analysis.observable == "m2" ? 2.0 : 1.0;
        analysis::CollapseOptions co;
        co.degree = cfg.analysis.degree;
        co.bootstrap = cfg.analysis.bootstrap;
        co.seed = cfg.analysis.seed;

        json groups = json::array();
        for (const Group &g : group_rows(rows, axis, cfg.analysis.observable)) {
            json entry{{"model", g.model},
                       {"axis", g.axis},
                       {"tau", detail::number(g.tau)},
                       {"h_or_g", detail::number(g.field)},
                       {"p", detail::number(g.p)},
                       {"observable", cfg.analysis.observable},
                       {"degree", co.degree}};
            double x_c = cfg.analysis.x_c.value_or(std::nan(""));
            if (!cfg.analysis.x_c) {
                try {
                    const auto ca = analysis::find_binder_crossing(g.curves, crossing_options(cfg));
                    if (ca.extrapolated) x_c = ca.extrapolated->value;
                } catch (const Error &) {
                }
            }
            if (!std::isfinite(x_c)) {
                entry["error"] = "no initial x_c: set analysis.x_c or provide crossing curves";
                groups.push_back(entry);
                continue;
            }
            const analysis::CollapseParams init{x_c, cfg.analysis.nu, cfg.analysis.beta_over_nu * scale};
            try {
                const analysis::CollapseFit fit = analysis::data_collapse(g.order_curves, init, 0.0, co);
                entry.update(fit_json(fit, scale));
                json curve = json::array();
                for (const auto &c : g.order_curves)
                    for (const auto &pt : c.points) {
                        const double sx = std::pow(c.L, 1.0 / fit.nu), sy = std::pow(c.L, fit.beta_over_nu);
                        curve.push_back({{"L", c.L},
                                         {"x", pt.x},
                                         {"x_scaled", (pt.x - fit.x_c) / fit.x_c * sx},
                                         {"y_scaled", pt.y * sy},
                                         {"y_scaled_err", pt.sigma * sy}});
                    }
                entry["master_curve"] = curve;
                if (!cfg.analysis.L_min.empty()) {
                    const auto rep = analysis::stability_sweep(g.order_curves, cfg.analysis.L_min, init, co);
                    json fits = json::array();
                    for (const auto &f : rep.fits) fits.push_back(fit_json(f, scale));
                    entry["stability"] = {{"fits", fits},
                                          {"notices", rep.notices},
                                          {"drift",
                                           {{"x_c", rep.x_c_drift},
                                            {"nu", rep.nu_drift},
                                            {"beta", rep.beta_drift / scale},
                                            {"beta_over_nu", rep.beta_over_nu_drift / scale}}}};
                }
                if (!opt.quiet)
                    std::cout << "collapse: x_c = " << fit.x_c << " nu = " << fit.nu
                              << " beta/nu = " << fit.beta_over_nu / scale << " cost = " << fit.cost << "\n";
            } catch (const Error &e) {
                entry["error"] = e.what();
            }
            groups.push_back(entry);
        }
        json out{{"groups", groups}};
        if (groups.size() == 1) out.update(groups.front());
        io::write_file((dir / "collapse.json").string(), out.dump(2) + "\n");
        return int{kOk};
    });
}

inline int cmd_surface(const Options &opt) {
    return detail::guarded("surface", [&] {
        const config::RunConfig cfg = detail::load(opt);
        const auto rows = io::read_estimates_file(input_path(cfg, opt));
        const std::string axis = infer_axis(cfg, rows);
        const fs::path dir = detail::output_dir(cfg, opt);
        const auto groups = group_rows(rows, axis, cfg.analysis.observable);
        std::vector<analysis::SurfaceInput> grid;
        for (const Group &g : groups) grid.push_back({0.0, 0.0, g.curves});
        const auto table = analysis::critical_surface_scan(grid, crossing_options(cfg));
        std::string csv = "model,axis,tau,h_or_g,p,critical,critical_err,status\n";
        for (size_t i = 0; i < groups.size(); ++i) {
            std::string status = table[i].status;
            for (char &ch : status)
                if (ch == ',' || ch == '\n') ch = ';';
            // the scanned axis column holds the critical value
            const Group &g = groups[i];
            const double c = table[i].critical;
            csv += g.model + "," + g.axis + "," + io::fmt(axis == "tau" ? c : g.tau) + "," +
                   io::fmt((axis == "h" || axis == "g") ? c : g.field) + "," + io::fmt(axis == "p" ? c : g.p) + "," +
                   io::fmt(c) + "," + io::fmt(table[i].error) + "," + status + "\n";
        }
        io::write_file((dir / "surface.csv").string(), csv);
        if (!opt.quiet) std::cout << "surface: " << groups.size() << " grid points\n";
        return int{kOk};
    });
}

}  // namespace mdite::commands
