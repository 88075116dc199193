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

// CSV artifacts: estimates rows (one per run point), per-chain sample
// streams, and a schema-checked reader for the analysis commands.

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mdite/error.hpp"
#include "mdite/estimators.hpp"
#include "mdite/model.hpp"
#include "mdite/runner.hpp"

namespace mdite::io {

inline const std::vector<std::string> &estimate_columns() {
    static const std::vector<std::string> cols = {
        "model", "L",     "tau",    "h_or_g", "p",  "n_d",    "sweeps",  "m_abs",     "m_abs_err",
        "m2",    "m2_err", "m4",    "m4_err", "R2", "R2_err", "tau_int", "flag_frac", "cluster_mean"};
    return cols;
}

/// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct EstimateRow {
    std::string model;
    int L = 0;
    double tau = 0, h_or_g = 0, p = 0;
    int n_d = 0;
    long sweeps = 0;
    double m_abs = 0, m_abs_err = 0, m2 = 0, m2_err = 0, m4 = 0, m4_err = 0, R2 = 0, R2_err = 0;
    double tau_int = 0, flag_frac = 0, cluster_mean = 0;
};

inline EstimateRow make_row(const runner::PointSpec &spec, const stats::RunEstimates &e) {
    EstimateRow r;
    r.model = model_name(spec.model.kind);
    r.L = spec.L;
    r.tau = spec.protocol.tau;
    r.h_or_g = spec.field;
    r.p = spec.protocol.p;
    r.n_d = spec.protocol.n_layers;
    r.sweeps = e.samples;
    r.m_abs = e.m_abs.mean;
    r.m_abs_err = e.m_abs.error;
    r.m2 = e.m2.mean;
    r.m2_err = e.m2.error;
    r.m4 = e.m4.mean;
    r.m4_err = e.m4.error;
    r.R2 = e.binder.mean;
    r.R2_err = e.binder.error;
    r.tau_int = e.tau_int;
    r.flag_frac = e.flag_fraction.mean;
    r.cluster_mean = e.cluster.mean;
    return r;
}

inline std::string header_line(const std::vector<std::string> &cols) {
    std::string s;
    for (size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
    return s + "\n";
}

inline std::string row_line(const EstimateRow &r) {
    std::ostringstream os;
    os << r.model << ',' << r.L << ',' << fmt(r.tau) << ',' << fmt(r.h_or_g) << ',' << fmt(r.p) << ',' << r.n_d
       << ',' << r.sweeps << ',' << fmt(r.m_abs) << ',' << fmt(r.m_abs_err) << ',' << fmt(r.m2) << ','
       << fmt(r.m2_err) << ',' << fmt(r.m4) << ',' << fmt(r.m4_err) << ',' << fmt(r.R2) << ',' << fmt(r.R2_err)
       << ',' << fmt(r.tau_int) << ',' << fmt(r.flag_frac) << ',' << fmt(r.cluster_mean) << '\n';
    return os.str();
}

inline void write_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + path);
    out << content;
    if (!out) throw Error(ErrorKind::Config, "write failed for " + path);
}

inline void write_estimates(const std::string &path, const std::vector<EstimateRow> &rows) {
    std::string s = header_line(estimate_columns());
    for (const auto &r : rows) s += row_line(r);
    write_file(path, s);
}

inline void write_samples(const std::string &path, const runner::ChainResult &chain) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "cannot write " + path);
    out << "sweep,m,m_abs,m2,m4,flag_frac,n_ops,cluster\n";
    const auto &ch = chain.series.channel;
    const long offset = chain.equilibration + chain.discarded;
    for (size_t i = 0; i < chain.series.size(); ++i) {
        out << offset + static_cast<long>(i) << ',' << fmt(ch[stats::kM][i]) << ',' << fmt(ch[stats::kMAbs][i])
            << ',' << fmt(ch[stats::kM2][i]) << ',' << fmt(ch[stats::kM4][i]) << ','
            << fmt(ch[stats::kFlagFraction][i]) << ',' << chain.n_total[i] << ',' << fmt(ch[stats::kCluster][i])
            << '\n';
    }
}

// ---- reading -----------------------------------------------------------

class SchemaError : public Error {
  public:
    explicit SchemaError(const std::string &msg) : Error(ErrorKind::Schema, msg) {}
};

inline std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string &s, const std::string &where) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw SchemaError(where + ": not a number: '" + s + "'");
    return v;
}

/// Reads an estimates-schema CSV. Extra columns are ignored; missing columns
/// are all listed in the error.
inline std::vector<EstimateRow> read_estimates(std::istream &in, const std::string &name) {
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw SchemaError(name + ": empty CSV");
    const auto header = split_csv_line(line);
    std::map<std::string, size_t> index;
    for (size_t i = 0; i < header.size(); ++i) index[header[i]] = i;
    std::string missing;
    for (const auto &c : estimate_columns())
        if (!index.count(c)) missing += (missing.empty() ? "" : ", ") + c;
    if (!missing.empty()) throw SchemaError(name + ": missing columns: " + missing);

    std::vector<EstimateRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        const std::string where = name + ":" + std::to_string(line_no);
        if (f.size() != header.size()) throw SchemaError(where + ": expected " + std::to_string(header.size()) + " fields");
        auto num = [&](const char *col) { return parse_double(f[index.at(col)], where); };
        EstimateRow r;
        r.model = f[index.at("model")];
        r.L = static_cast<int>(num("L"));
        r.tau = num("tau");
        r.h_or_g = num("h_or_g");
        r.p = num("p");
        r.n_d = static_cast<int>(num("n_d"));
        r.sweeps = static_cast<long>(num("sweeps"));
        r.m_abs = num("m_abs");
        r.m_abs_err = num("m_abs_err");
        r.m2 = num("m2");
        r.m2_err = num("m2_err");
        r.m4 = num("m4");
        r.m4_err = num("m4_err");
        r.R2 = num("R2");
        r.R2_err = num("R2_err");
        r.tau_int = num("tau_int");
        r.flag_frac = num("flag_frac");
        r.cluster_mean = num("cluster_mean");
        rows.push_back(r);
    }
    if (rows.empty()) throw SchemaError(name + ": no data rows");
    return rows;
}

inline std::vector<EstimateRow> read_estimates_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError(path + ": cannot open");
    return read_estimates(in, path);
}

}  // namespace mdite::io
