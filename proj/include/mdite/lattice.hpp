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

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mdite/error.hpp"

namespace mdite {

enum class CouplingClass : uint8_t { Unit, G };

enum class Geometry : uint8_t { ChainPbc, ColumnarPbc, Explicit };

inline const char *geometry_name(Geometry g) {
    switch (g) {
        case Geometry::ChainPbc: return "chain-PBC";
        case Geometry::ColumnarPbc: return "square-columnar-PBC";
        case Geometry::Explicit: return "explicit";
    }
    return "?";
}

struct Bond {
    int a = 0;
    int b = 0;
    CouplingClass coupling = CouplingClass::Unit;
    /// Number of geometric bonds folded into this one (2 when periodic wrap
    /// on a length-2 direction produces the same pair twice).
    int multiplicity = 1;

    bool operator==(const Bond &) const = default;
};

struct Coord {
    int x = 0;
    int y = 0;
    bool operator==(const Coord &) const = default;
};

struct LatticeSpec {
    int n_sites = 0;
    std::vector<Bond> bonds;
    std::vector<Coord> coords;
    Geometry geometry = Geometry::Explicit;
    int lx = 0;
    int ly = 1;

    int n_bonds() const { return static_cast<int>(bonds.size()); }

    /// (-1)^(x+y); +1 for every site when coordinates are absent.
    int stagger_sign(int site) const {
        if (coords.empty()) return 1;
        return ((coords[site].x + coords[site].y) % 2 == 0) ? 1 : -1;
    }

    /// Throws if any bond is malformed.
    void validate() const {
        if (n_sites < 1) throw Error(ErrorKind::InvalidSize, "lattice needs at least one site");
        for (const Bond &bond : bonds) {
            if (bond.a < 0 || bond.b < 0 || bond.a >= n_sites || bond.b >= n_sites)
                throw Error(ErrorKind::InvalidSize, "bond references a site outside the lattice");
            if (bond.a == bond.b) throw Error(ErrorKind::InvalidSize, "self-bond");
            if (bond.multiplicity < 1) throw Error(ErrorKind::InvalidSize, "bond multiplicity must be >= 1");
        }
        if (!coords.empty() && static_cast<int>(coords.size()) != n_sites)
            throw Error(ErrorKind::Shape, "coordinate count differs from site count");
    }
};

namespace detail {

// Adds (a, b) or bumps the multiplicity of an existing bond between the same
// pair with the same coupling class.
inline void add_bond(std::vector<Bond> &bonds, int a, int b, CouplingClass cls) {
    const int lo = std::min(a, b), hi = std::max(a, b);
    for (Bond &existing : bonds) {
        if (std::min(existing.a, existing.b) == lo && std::max(existing.a, existing.b) == hi &&
            existing.coupling == cls) {
            ++existing.multiplicity;
            return;
        }
    }
    bonds.push_back(Bond{a, b, cls, 1});
}

}  // namespace detail

/// Periodic chain of L sites with bonds (i, i+1 mod L). For L = 2 the two
/// geometric bonds coincide and are folded into one of multiplicity 2.
inline LatticeSpec build_chain_lattice(int length) {
    if (length < 2) throw Error(ErrorKind::InvalidSize, "chain length must be >= 2, got " + std::to_string(length));
    LatticeSpec lat;
    lat.n_sites = length;
    lat.geometry = Geometry::ChainPbc;
    lat.lx = length;
    lat.ly = 1;
    lat.coords.reserve(length);
    for (int i = 0; i < length; ++i) {
        lat.coords.push_back(Coord{i, 0});
        detail::add_bond(lat.bonds, i, (i + 1) % length, CouplingClass::Unit);
    }
    return lat;
}

/// Columnar dimerized square lattice, lx columns by ly rows, periodic in both
/// directions. Horizontal bonds (x, y)-(x+1, y) with even x carry the g
/// coupling; every other nearest-neighbour bond has unit strength. Site index
/// is y * lx + x. Both extents must be even so the lattice stays bipartite.
inline LatticeSpec build_columnar_lattice(int lx, int ly) {
    if (lx < 2 || ly < 2 || lx % 2 != 0 || ly % 2 != 0)
        throw Error(ErrorKind::InvalidSize, "columnar lattice needs even extents >= 2, got " + std::to_string(lx) +
                                                "x" + std::to_string(ly));
    LatticeSpec lat;
    lat.n_sites = lx * ly;
    lat.geometry = Geometry::ColumnarPbc;
    lat.lx = lx;
    lat.ly = ly;
    lat.coords.resize(lat.n_sites);
    auto index = [lx](int x, int y) { return y * lx + x; };
    for (int y = 0; y < ly; ++y) {
        for (int x = 0; x < lx; ++x) {
            lat.coords[index(x, y)] = Coord{x, y};
            const CouplingClass horizontal = (x % 2 == 0) ? CouplingClass::G : CouplingClass::Unit;
            detail::add_bond(lat.bonds, index(x, y), index((x + 1) % lx, y), horizontal);
            detail::add_bond(lat.bonds, index(x, y), index(x, (y + 1) % ly), CouplingClass::Unit);
        }
    }
    return lat;
}

inline LatticeSpec build_columnar_lattice(int side) { return build_columnar_lattice(side, side); }

/// Arbitrary site count and bond list; no coordinates unless supplied.
inline LatticeSpec build_explicit_lattice(int n_sites, const std::vector<std::pair<int, int>> &pairs,
                                          std::vector<Coord> coords = {}) {
    LatticeSpec lat;
    lat.n_sites = n_sites;
    lat.geometry = Geometry::Explicit;
    lat.lx = n_sites;
    lat.coords = std::move(coords);
    for (const auto &[a, b] : pairs) {
        if (a == b) throw Error(ErrorKind::InvalidSize, "self-bond");
        detail::add_bond(lat.bonds, a, b, CouplingClass::Unit);
    }
    lat.validate();
    return lat;
}

}  // namespace mdite
