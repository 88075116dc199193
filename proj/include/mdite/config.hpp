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

// Run configuration: TOML documents with [model], [protocol], [sampler],
// [output], [scan], [oracle] and [analysis] tables. Every validation error
// carries "<source>:<line>:" pointing at the offending key.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mdite/error.hpp"
#include "mdite/lattice.hpp"
#include "mdite/model.hpp"
#include "toml.hpp"

namespace mdite::config {

struct ModelBlock {
    ModelKind kind = ModelKind::Tfim;
    std::string lattice = "chain";  // chain | columnar | explicit
    int L = 0;
    int ly = 0;  // columnar only; 0 means ly = L
    double h = 0.0;
    double g = 0.0;
    double J = 1.0;
    int sites = 0;
    std::vector<std::pair<int, int>> bonds;
    std::vector<Coord> coords;
};

struct ProtocolBlock {
    double tau = 1.0;
    double p = 0.0;
    std::optional<int> n_d;  // empty: auto
};

struct SamplerBlock {
    long sweeps = 100000;
    std::optional<long> equilibration;  // empty: auto
    int chains = 4;
    uint64_t seed = 1;
    std::string slice = "closure";
    int bin_size = 0;  // 0: automatic
    bool debug_checks = false;
};

struct OutputBlock {
    std::string directory = "mdite-out";
    std::optional<bool> samples;  // default: on for run, off for scan
    std::vector<std::string> formats = {"csv", "json"};

    bool has_format(std::string_view f) const {
        for (const auto &x : formats)
            if (x == f) return true;
        return false;
    }
};

struct ScanBlock {
    std::string axis;  // p | tau | h | g | n_d
    std::vector<double> values;
    std::vector<int> sizes;
    // Optional grids over the fixed parameters (critical surfaces).
    std::vector<double> tau_grid;
    std::vector<double> field_grid;
    std::vector<double> p_grid;
};

struct OracleBlock {
    int cap = 12;
    bool marginals = false;
    bool stationary = false;
    double tol = 1e-10;
    int max_iterations = 10000;
};

struct AnalysisBlock {
    std::string input = "scan.csv";
    std::string observable = "m_abs";
    int degree = 7;
    int bootstrap = 200;
    uint64_t seed = 2024;
    int local_points = 5;
    std::optional<double> x_c;
    double nu = 1.0;
    double beta_over_nu = 0.5;
    std::vector<double> L_min;
};

struct RunConfig {
    std::string source = "<config>";
    std::string text;
    ModelBlock model;
    ProtocolBlock protocol;
    SamplerBlock sampler;
    OutputBlock output;
    std::optional<ScanBlock> scan;
    OracleBlock oracle;
    AnalysisBlock analysis;

    /// Linear size used by the automatic depth rule.
    int linear_size() const { return model.lattice == "explicit" ? model.sites : model.L; }

    int resolved_depth() const {
        return protocol.n_d ? *protocol.n_d : auto_depth(linear_size(), protocol.tau);
    }

    double field() const { return model.kind == ModelKind::Tfim ? model.h : model.g; }
};

/// Builds the Hamiltonian description from a model block (validated).
inline ModelSpec build_model(const ModelBlock &m) {
    ModelSpec spec;
    spec.kind = m.kind;
    spec.h = m.h;
    spec.g = m.g;
    spec.J = m.J;
    if (m.lattice == "chain") {
        spec.lattice = build_chain_lattice(m.L);
    } else if (m.lattice == "columnar") {
        spec.lattice = build_columnar_lattice(m.L, m.ly > 0 ? m.ly : m.L);
    } else {
        spec.lattice = build_explicit_lattice(m.sites, m.bonds, m.coords);
    }
    spec.validate();
    return spec;
}

inline ProtocolParams build_protocol(const RunConfig &cfg) {
    ProtocolParams p{cfg.protocol.tau, cfg.protocol.p, cfg.resolved_depth()};
    p.validate();
    return p;
}

namespace detail {

class Reader {
  public:
    Reader(std::string source, const toml::table &root) : source_(std::move(source)), root_(root) {}

    [[noreturn]] void fail(const toml::node *node, const std::string &msg) const {
        const auto line = node ? node->source().begin.line : 1;
        throw Error(ErrorKind::Config, source_ + ":" + std::to_string(line) + ": " + msg);
    }

    const toml::table *table(std::string_view name) const {
        const toml::node *n = root_.get(name);
        if (!n) return nullptr;
        if (!n->is_table()) fail(n, "'" + std::string(name) + "' must be a table");
        return n->as_table();
    }

    void only_keys(const toml::table &t, std::string_view where, std::initializer_list<std::string_view> allowed) const {
        for (const auto &[key, node] : t) {
            bool ok = false;
            for (auto a : allowed) ok = ok || key.str() == a;
            if (!ok) fail(&node, "unknown key '" + std::string(key.str()) + "' in [" + std::string(where) + "]");
        }
    }

    static std::string qualified(std::string_view where, std::string_view key) {
        return std::string(where) + "." + std::string(key);
    }

    std::optional<double> number(const toml::table &t, std::string_view where, std::string_view key) const {
        const toml::node *n = t.get(key);
        if (!n) return std::nullopt;
        if (auto v = n->value<double>()) return *v;
        fail(n, qualified(where, key) + " must be a number");
    }

    std::optional<long> integer(const toml::table &t, std::string_view where, std::string_view key) const {
        const toml::node *n = t.get(key);
        if (!n) return std::nullopt;
        if (n->is_integer()) return static_cast<long>(n->as_integer()->get());
        fail(n, qualified(where, key) + " must be an integer");
    }

    std::optional<std::string> string(const toml::table &t, std::string_view where, std::string_view key) const {
        const toml::node *n = t.get(key);
        if (!n) return std::nullopt;
        if (n->is_string()) return n->as_string()->get();
        fail(n, qualified(where, key) + " must be a string");
    }

    std::optional<bool> boolean(const toml::table &t, std::string_view where, std::string_view key) const {
        const toml::node *n = t.get(key);
        if (!n) return std::nullopt;
        if (n->is_boolean()) return n->as_boolean()->get();
        fail(n, qualified(where, key) + " must be true or false");
    }

    std::vector<double> numbers(const toml::table &t, std::string_view where, std::string_view key) const {
        std::vector<double> out;
        const toml::node *n = t.get(key);
        if (!n) return out;
        if (!n->is_array()) fail(n, qualified(where, key) + " must be an array of numbers");
        for (const toml::node &e : *n->as_array()) {
            auto v = e.value<double>();
            if (!v) fail(&e, qualified(where, key) + " entries must be numbers");
            out.push_back(*v);
        }
        return out;
    }

    std::vector<long> integers(const toml::table &t, std::string_view where, std::string_view key) const {
        std::vector<long> out;
        const toml::node *n = t.get(key);
        if (!n) return out;
        if (!n->is_array()) fail(n, qualified(where, key) + " must be an array of integers");
        for (const toml::node &e : *n->as_array()) {
            if (!e.is_integer()) fail(&e, qualified(where, key) + " entries must be integers");
            out.push_back(static_cast<long>(e.as_integer()->get()));
        }
        return out;
    }

    std::vector<std::pair<long, long>> pairs(const toml::table &t, std::string_view where, std::string_view key) const {
        std::vector<std::pair<long, long>> out;
        const toml::node *n = t.get(key);
        if (!n) return out;
        if (!n->is_array()) fail(n, qualified(where, key) + " must be an array of [a, b] pairs");
        for (const toml::node &e : *n->as_array()) {
            const toml::array *a = e.as_array();
            if (!a || a->size() != 2 || !(*a)[0].is_integer() || !(*a)[1].is_integer())
                fail(&e, qualified(where, key) + " entries must be [integer, integer]");
            out.emplace_back((*a)[0].as_integer()->get(), (*a)[1].as_integer()->get());
        }
        return out;
    }

    const toml::node *node(const toml::table &t, std::string_view key) const { return t.get(key); }
    const toml::node *anchor(const toml::table *t, std::string_view key) const {
        if (t)
            if (const toml::node *n = t->get(key)) return n;
        return t;
    }

  private:
    std::string source_;
    const toml::table &root_;
};

}  // namespace detail

inline RunConfig parse_config(std::string_view text, std::string source = "<config>") {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error &e) {
        throw Error(ErrorKind::Config, source + ":" + std::to_string(e.source().begin.line) + ": " +
                                           std::string(e.description()));
    }
    detail::Reader rd(source, root);
    for (const auto &[key, node] : root) {
        const auto k = key.str();
        if (k != "model" && k != "protocol" && k != "sampler" && k != "output" && k != "scan" && k != "oracle" &&
            k != "analysis")
            rd.fail(&node, "unknown table '" + std::string(k) + "'");
    }

    RunConfig cfg;
    cfg.source = source;
    cfg.text = std::string(text);

    // [model]
    const toml::table *model = rd.table("model");
    if (!model) rd.fail(nullptr, "missing [model] table");
    rd.only_keys(*model, "model", {"kind", "lattice", "L", "ly", "h", "g", "J", "sites", "bonds", "coords"});
    {
        ModelBlock &m = cfg.model;
        const auto kind = rd.string(*model, "model", "kind");
        if (!kind) rd.fail(model, "model.kind is required (\"tfim\" or \"cdhm\")");
        if (*kind == "tfim") {
            m.kind = ModelKind::Tfim;
            m.lattice = "chain";
        } else if (*kind == "cdhm") {
            m.kind = ModelKind::Cdhm;
            m.lattice = "columnar";
        } else {
            rd.fail(rd.node(*model, "kind"), "model.kind must be \"tfim\" or \"cdhm\", got \"" + *kind + "\"");
        }
        if (auto lat = rd.string(*model, "model", "lattice")) {
            if (*lat != "chain" && *lat != "columnar" && *lat != "explicit")
                rd.fail(rd.node(*model, "lattice"), "model.lattice must be chain, columnar or explicit");
            m.lattice = *lat;
        }
        if (auto v = rd.number(*model, "model", "h")) m.h = *v;
        if (auto v = rd.number(*model, "model", "g")) m.g = *v;
        if (auto v = rd.number(*model, "model", "J")) m.J = *v;
        if (m.h < 0.0) rd.fail(rd.node(*model, "h"), "model.h must be >= 0");
        if (m.g < 0.0) rd.fail(rd.node(*model, "g"), "model.g must be >= 0");
        if (!(m.J > 0.0)) rd.fail(rd.node(*model, "J"), "model.J must be > 0");
        if (m.kind == ModelKind::Tfim && rd.node(*model, "g"))
            rd.fail(rd.node(*model, "g"), "model.g applies to cdhm only");
        if (m.kind == ModelKind::Cdhm && rd.node(*model, "h"))
            rd.fail(rd.node(*model, "h"), "model.h applies to tfim only");
        if (m.lattice == "explicit") {
            const auto sites = rd.integer(*model, "model", "sites");
            if (!sites || *sites < 1) rd.fail(rd.anchor(model, "sites"), "explicit lattice needs model.sites >= 1");
            m.sites = static_cast<int>(*sites);
            m.L = m.sites;
            for (auto [a, b] : rd.pairs(*model, "model", "bonds")) {
                if (a < 0 || b < 0 || a >= m.sites || b >= m.sites || a == b)
                    rd.fail(rd.node(*model, "bonds"), "model.bonds entry [" + std::to_string(a) + ", " +
                                                          std::to_string(b) + "] is not a valid site pair");
                m.bonds.emplace_back(static_cast<int>(a), static_cast<int>(b));
            }
            for (auto [x, y] : rd.pairs(*model, "model", "coords"))
                m.coords.push_back({static_cast<int>(x), static_cast<int>(y)});
            if (!m.coords.empty() && static_cast<int>(m.coords.size()) != m.sites)
                rd.fail(rd.node(*model, "coords"), "model.coords must list one [x, y] per site");
        } else {
            if (rd.node(*model, "sites") || rd.node(*model, "bonds") || rd.node(*model, "coords"))
                rd.fail(model, "model.sites/bonds/coords need lattice = \"explicit\"");
            const auto L = rd.integer(*model, "model", "L");
            if (!L) rd.fail(model, "model.L is required");
            m.L = static_cast<int>(*L);
            if (auto ly = rd.integer(*model, "model", "ly")) m.ly = static_cast<int>(*ly);
            if (m.lattice == "chain") {
                if (m.L < 2) rd.fail(rd.node(*model, "L"), "chain length L must be >= 2");
                if (rd.node(*model, "ly")) rd.fail(rd.node(*model, "ly"), "model.ly applies to columnar lattices");
            } else {
                const int ly = m.ly > 0 ? m.ly : m.L;
                if (m.L < 2 || m.L % 2) rd.fail(rd.node(*model, "L"), "columnar L must be even and >= 2");
                if (ly < 2 || ly % 2) rd.fail(rd.anchor(model, "ly"), "columnar ly must be even and >= 2");
            }
        }
        try {
            (void)build_model(m);
        } catch (const Error &e) {
            rd.fail(model, e.what());
        }
    }

    // [protocol]
    const toml::table *protocol = rd.table("protocol");
    if (!protocol) rd.fail(nullptr, "missing [protocol] table");
    rd.only_keys(*protocol, "protocol", {"tau", "p", "n_d"});
    {
        ProtocolBlock &p = cfg.protocol;
        const auto tau = rd.number(*protocol, "protocol", "tau");
        if (!tau) rd.fail(protocol, "protocol.tau is required");
        if (!(*tau > 0.0) || !std::isfinite(*tau)) rd.fail(rd.node(*protocol, "tau"), "protocol.tau must be > 0");
        p.tau = *tau;
        const auto prob = rd.number(*protocol, "protocol", "p");
        if (!prob) rd.fail(protocol, "protocol.p is required");
        if (!(*prob >= 0.0 && *prob <= 1.0))
            rd.fail(rd.node(*protocol, "p"), "protocol.p must lie in [0, 1], got " + std::to_string(*prob));
        p.p = *prob;
        if (const toml::node *nd = rd.node(*protocol, "n_d")) {
            if (nd->is_string()) {
                if (nd->as_string()->get() != "auto") rd.fail(nd, "protocol.n_d must be an integer or \"auto\"");
            } else if (nd->is_integer()) {
                const auto v = nd->as_integer()->get();
                if (v < 1) rd.fail(nd, "protocol.n_d must be >= 1");
                p.n_d = static_cast<int>(v);
            } else {
                rd.fail(nd, "protocol.n_d must be an integer or \"auto\"");
            }
        }
    }

    // [sampler]
    if (const toml::table *s = rd.table("sampler")) {
        rd.only_keys(*s, "sampler",
                     {"sweeps", "equilibration", "chains", "seed", "slice", "bin_size", "debug_checks"});
        SamplerBlock &b = cfg.sampler;
        if (auto v = rd.integer(*s, "sampler", "sweeps")) {
            if (*v < 1) rd.fail(rd.node(*s, "sweeps"), "sampler.sweeps must be >= 1");
            b.sweeps = *v;
        }
        if (const toml::node *eq = rd.node(*s, "equilibration")) {
            if (eq->is_string()) {
                if (eq->as_string()->get() != "auto") rd.fail(eq, "sampler.equilibration must be an integer or \"auto\"");
            } else if (eq->is_integer()) {
                if (eq->as_integer()->get() < 0) rd.fail(eq, "sampler.equilibration must be >= 0");
                b.equilibration = static_cast<long>(eq->as_integer()->get());
            } else {
                rd.fail(eq, "sampler.equilibration must be an integer or \"auto\"");
            }
        }
        if (auto v = rd.integer(*s, "sampler", "chains")) {
            if (*v < 1 || *v > 4096) rd.fail(rd.node(*s, "chains"), "sampler.chains must lie in [1, 4096]");
            b.chains = static_cast<int>(*v);
        }
        if (auto v = rd.integer(*s, "sampler", "seed")) {
            if (*v < 0) rd.fail(rd.node(*s, "seed"), "sampler.seed must be >= 0");
            b.seed = static_cast<uint64_t>(*v);
        }
        if (auto v = rd.string(*s, "sampler", "slice")) {
            if (*v != "closure")
                rd.fail(rd.node(*s, "slice"), "sampler.slice: only \"closure\" is supported, got \"" + *v + "\"");
            b.slice = *v;
        }
        if (auto v = rd.integer(*s, "sampler", "bin_size")) {
            if (*v < 0) rd.fail(rd.node(*s, "bin_size"), "sampler.bin_size must be >= 0");
            b.bin_size = static_cast<int>(*v);
        }
        if (auto v = rd.boolean(*s, "sampler", "debug_checks")) b.debug_checks = *v;
    }

    // [output]
    if (const toml::table *o = rd.table("output")) {
        rd.only_keys(*o, "output", {"directory", "samples", "formats"});
        if (auto v = rd.string(*o, "output", "directory")) {
            if (v->empty()) rd.fail(rd.node(*o, "directory"), "output.directory must not be empty");
            cfg.output.directory = *v;
        }
        if (auto v = rd.boolean(*o, "output", "samples")) cfg.output.samples = *v;
        if (const toml::node *f = rd.node(*o, "formats")) {
            if (!f->is_array()) rd.fail(f, "output.formats must be an array of strings");
            cfg.output.formats.clear();
            for (const toml::node &e : *f->as_array()) {
                if (!e.is_string() || (e.as_string()->get() != "csv" && e.as_string()->get() != "json"))
                    rd.fail(&e, "output.formats entries must be \"csv\" or \"json\"");
                cfg.output.formats.push_back(e.as_string()->get());
            }
        }
    }

    // [scan]
    if (const toml::table *s = rd.table("scan")) {
        rd.only_keys(*s, "scan", {"axis", "values", "sizes", "tau", "h", "g", "p"});
        ScanBlock sc;
        const auto axis = rd.string(*s, "scan", "axis");
        if (!axis) rd.fail(s, "scan.axis is required");
        if (*axis != "p" && *axis != "tau" && *axis != "h" && *axis != "g" && *axis != "n_d")
            rd.fail(rd.node(*s, "axis"), "scan.axis must be one of p, tau, h, g, n_d");
        if ((*axis == "h" && cfg.model.kind != ModelKind::Tfim) || (*axis == "g" && cfg.model.kind != ModelKind::Cdhm))
            rd.fail(rd.node(*s, "axis"), "scan.axis \"" + *axis + "\" does not apply to this model");
        sc.axis = *axis;
        sc.values = rd.numbers(*s, "scan", "values");
        if (sc.values.size() < 3) rd.fail(rd.anchor(s, "values"), "scan.values needs at least 3 grid points");
        for (double v : sc.values) {
            const bool bad = (sc.axis == "p" && !(v >= 0.0 && v <= 1.0)) || (sc.axis == "tau" && !(v > 0.0)) ||
                             ((sc.axis == "h" || sc.axis == "g") && !(v >= 0.0)) ||
                             (sc.axis == "n_d" && !(v >= 1.0 && v == std::floor(v)));
            if (bad) rd.fail(rd.node(*s, "values"), "scan.values entry " + std::to_string(v) + " is out of range");
        }
        for (long L : rd.integers(*s, "scan", "sizes")) {
            if (L < 2) rd.fail(rd.node(*s, "sizes"), "scan.sizes entries must be >= 2");
            if (cfg.model.lattice == "columnar" && L % 2)
                rd.fail(rd.node(*s, "sizes"), "columnar scan.sizes entries must be even");
            sc.sizes.push_back(static_cast<int>(L));
        }
        if (cfg.model.lattice == "explicit" && !sc.sizes.empty())
            rd.fail(rd.node(*s, "sizes"), "scan.sizes cannot be used with an explicit lattice");
        if (sc.sizes.empty()) sc.sizes.push_back(cfg.model.L);
        sc.tau_grid = rd.numbers(*s, "scan", "tau");
        sc.p_grid = rd.numbers(*s, "scan", "p");
        sc.field_grid = rd.numbers(*s, "scan", cfg.model.kind == ModelKind::Tfim ? "h" : "g");
        if (rd.node(*s, cfg.model.kind == ModelKind::Tfim ? "g" : "h"))
            rd.fail(rd.node(*s, cfg.model.kind == ModelKind::Tfim ? "g" : "h"), "field grid does not apply to this model");
        if ((sc.axis == "tau" && !sc.tau_grid.empty()) || (sc.axis == "p" && !sc.p_grid.empty()) ||
            ((sc.axis == "h" || sc.axis == "g") && !sc.field_grid.empty()))
            rd.fail(rd.node(*s, sc.axis), "the scanned axis cannot also have a fixed grid");
        for (double v : sc.tau_grid)
            if (!(v > 0.0)) rd.fail(rd.node(*s, "tau"), "scan.tau entries must be > 0");
        for (double v : sc.p_grid)
            if (!(v >= 0.0 && v <= 1.0)) rd.fail(rd.node(*s, "p"), "scan.p entries must lie in [0, 1]");
        for (double v : sc.field_grid)
            if (!(v >= 0.0)) rd.fail(rd.anchor(s, cfg.model.kind == ModelKind::Tfim ? "h" : "g"), "field grid entries must be >= 0");
        cfg.scan = sc;
    }

    // [oracle]
    if (const toml::table *o = rd.table("oracle")) {
        rd.only_keys(*o, "oracle", {"cap", "marginals", "stationary", "tol", "max_iterations"});
        if (auto v = rd.integer(*o, "oracle", "cap")) {
            if (*v < 1 || *v > 14) rd.fail(rd.node(*o, "cap"), "oracle.cap must lie in [1, 14]");
            cfg.oracle.cap = static_cast<int>(*v);
        }
        if (auto v = rd.boolean(*o, "oracle", "marginals")) cfg.oracle.marginals = *v;
        if (auto v = rd.boolean(*o, "oracle", "stationary")) cfg.oracle.stationary = *v;
        if (auto v = rd.number(*o, "oracle", "tol")) {
            if (!(*v > 0.0)) rd.fail(rd.node(*o, "tol"), "oracle.tol must be > 0");
            cfg.oracle.tol = *v;
        }
        if (auto v = rd.integer(*o, "oracle", "max_iterations")) {
            if (*v < 1) rd.fail(rd.node(*o, "max_iterations"), "oracle.max_iterations must be >= 1");
            cfg.oracle.max_iterations = static_cast<int>(*v);
        }
    }

    // [analysis]
    if (const toml::table *a = rd.table("analysis")) {
        rd.only_keys(*a, "analysis",
                     {"input", "observable", "degree", "bootstrap", "seed", "local_points", "x_c", "nu",
                      "beta_over_nu", "L_min"});
        AnalysisBlock &b = cfg.analysis;
        if (auto v = rd.string(*a, "analysis", "input")) b.input = *v;
        if (auto v = rd.string(*a, "analysis", "observable")) {
            if (*v != "m_abs" && *v != "m2")
                rd.fail(rd.node(*a, "observable"), "analysis.observable must be \"m_abs\" or \"m2\"");
            b.observable = *v;
        }
        if (auto v = rd.integer(*a, "analysis", "degree")) {
            if (*v < 1 || *v > 15) rd.fail(rd.node(*a, "degree"), "analysis.degree must lie in [1, 15]");
            b.degree = static_cast<int>(*v);
        }
        if (auto v = rd.integer(*a, "analysis", "bootstrap")) {
            if (*v < 0) rd.fail(rd.node(*a, "bootstrap"), "analysis.bootstrap must be >= 0");
            b.bootstrap = static_cast<int>(*v);
        }
        if (auto v = rd.integer(*a, "analysis", "seed")) b.seed = static_cast<uint64_t>(*v);
        if (auto v = rd.integer(*a, "analysis", "local_points")) {
            if (*v < 2) rd.fail(rd.node(*a, "local_points"), "analysis.local_points must be >= 2");
            b.local_points = static_cast<int>(*v);
        }
        if (auto v = rd.number(*a, "analysis", "x_c")) {
            if (*v == 0.0) rd.fail(rd.node(*a, "x_c"), "analysis.x_c must be nonzero");
            b.x_c = *v;
        }
        if (auto v = rd.number(*a, "analysis", "nu")) {
            if (!(*v > 0.0)) rd.fail(rd.node(*a, "nu"), "analysis.nu must be > 0");
            b.nu = *v;
        }
        if (auto v = rd.number(*a, "analysis", "beta_over_nu")) b.beta_over_nu = *v;
        b.L_min = rd.numbers(*a, "analysis", "L_min");
    }
    return cfg;
}

inline RunConfig load_config(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Config, path + ":1: cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

/// The parsed document re-emitted as JSON (for manifests).
inline std::string config_as_json(const RunConfig &cfg) {
    const toml::table root = toml::parse(cfg.text, cfg.source);
    std::stringstream ss;
    ss << toml::json_formatter{root};
    return ss.str();
}

}  // namespace mdite::config
