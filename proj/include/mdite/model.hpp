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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdite/error.hpp"
#include "mdite/lattice.hpp"

namespace mdite {

enum class ModelKind : uint8_t { Tfim, Cdhm };

inline const char *model_name(ModelKind kind) { return kind == ModelKind::Tfim ? "tfim" : "cdhm"; }

/// TFIM:  H = -J sum_<ij> Z_i Z_j - h sum_i X_i
/// CDHM:  H = sum_<ij>_1 S_i.S_j + g sum_<ij>_g S_i.S_j
struct ModelSpec {
    ModelKind kind = ModelKind::Tfim;
    LatticeSpec lattice;
    double h = 0.0;
    double g = 0.0;
    double J = 1.0;

    int n_sites() const { return lattice.n_sites; }

    /// Coupling carried by one stored bond, multiplicity included.
    double coupling(const Bond &bond) const {
        if (kind == ModelKind::Tfim) return J * bond.multiplicity;
        return (bond.coupling == CouplingClass::G ? g : 1.0) * bond.multiplicity;
    }

    void validate() const {
        lattice.validate();
        if (!(h >= 0.0) || !(g >= 0.0) || !(J > 0.0))
            throw Error(ErrorKind::UnsupportedModel, "couplings must satisfy h >= 0, g >= 0, J > 0");
        if (kind == ModelKind::Cdhm && lattice.coords.empty())
            throw Error(ErrorKind::UnsupportedModel, "CDHM needs site coordinates for the sublattice rotation");
    }
};

inline ModelSpec make_tfim(int length, double h, double J = 1.0) {
    return ModelSpec{ModelKind::Tfim, build_chain_lattice(length), h, 0.0, J};
}

inline ModelSpec make_cdhm(int lx, int ly, double g) {
    return ModelSpec{ModelKind::Cdhm, build_columnar_lattice(lx, ly), 0.0, g, 1.0};
}

struct ProtocolParams {
    double tau = 1.0;
    double p = 0.0;
    int n_layers = 1;

    void validate() const {
        if (!(tau > 0.0)) throw Error(ErrorKind::Config, "tau must be > 0");
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Config, "p must lie in [0, 1]");
        if (n_layers < 1) throw Error(ErrorKind::Config, "n_layers must be >= 1");
    }
};

/// Circuit depth that reaches the stationary regime for both models: 2L/tau.
inline int auto_depth(int linear_size, double tau) {
    return std::max(1, static_cast<int>(std::lround(2.0 * linear_size / tau)));
}

/// Matrix elements of one bond operator in the Z basis after the constant
/// shift (and, for the Heisenberg case, the sublattice sign rotation).
struct BondVertex {
    double aligned = 0.0;       // <ss|H_b|ss>
    double anti_aligned = 0.0;  // <s,-s|H_b|s,-s>
    double exchange = 0.0;      // <-s,s|H_b|s,-s>

    double diagonal(int8_t sa, int8_t sb) const { return sa == sb ? aligned : anti_aligned; }
};

/// H = constant - sum of the positive operators listed here.
struct OperatorTable {
    ModelKind kind = ModelKind::Tfim;
    int n_sites = 0;
    double site_diag = 0.0;  // <s|H_0,i|s>
    double site_flip = 0.0;  // <-s|H_1,i|s>
    std::vector<BondVertex> bonds;
    double constant_offset = 0.0;

    bool has_site_operators() const { return kind == ModelKind::Tfim; }

    /// Number of locations a diagonal insertion chooses among (N_b).
    int n_diag_candidates() const {
        return static_cast<int>(bonds.size()) + (has_site_operators() ? n_sites : 0);
    }
};

inline OperatorTable operator_table(const ModelSpec &model) {
    model.validate();
    OperatorTable table;
    table.kind = model.kind;
    table.n_sites = model.n_sites();
    table.bonds.reserve(model.lattice.bonds.size());
    if (model.kind == ModelKind::Tfim) {
        // H_0 = h I, H_1 = h X, H_2 = J (Z Z + 1)
        table.site_diag = model.h;
        table.site_flip = model.h;
        for (const Bond &bond : model.lattice.bonds) {
            const double jb = model.coupling(bond);
            table.bonds.push_back(BondVertex{2.0 * jb, 0.0, 0.0});
            table.constant_offset += jb;
        }
        table.constant_offset += model.h * model.n_sites();
    } else {
        // J_b (1/4 - S^z S^z) and (J_b / 2)(S^+ S^- + S^- S^+) with the sign
        // of the latter removed by the bipartite rotation.
        for (const Bond &bond : model.lattice.bonds) {
            const double jb = model.coupling(bond);
            if (model.lattice.stagger_sign(bond.a) == model.lattice.stagger_sign(bond.b))
                throw Error(ErrorKind::UnsupportedModel, "Heisenberg bond joins sites of the same sublattice");
            table.bonds.push_back(BondVertex{0.0, 0.5 * jb, 0.5 * jb});
            table.constant_offset += 0.25 * jb;
        }
    }
    return table;
}

/// Uniform (TFIM) or staggered (CDHM) Z magnetization of one configuration.
inline double magnetization(std::span<const int8_t> spins, const ModelSpec &model) {
    if (static_cast<int>(spins.size()) != model.n_sites())
        throw Error(ErrorKind::Shape, "spin vector length " + std::to_string(spins.size()) + " != " +
                                          std::to_string(model.n_sites()));
    long total = 0;
    if (model.kind == ModelKind::Tfim) {
        for (int8_t s : spins) total += s;
    } else {
        for (int i = 0; i < model.n_sites(); ++i) total += model.lattice.stagger_sign(i) * spins[i];
    }
    return static_cast<double>(total);
}

}  // namespace mdite
