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

// Finite-size-scaling analysis: Binder-ratio crossings between system sizes,
// master-curve data collapse and critical-surface tables.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mdite/error.hpp"
#include "mdite/rng.hpp"

namespace mdite::analysis {

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;
};

/// One system size's data as a function of the scanned control parameter.
struct Curve {
    double L = 0.0;
    std::vector<CurvePoint> points;
};

// ---- weighted polynomial least squares -------------------------------

/// y ≈ sum_k c_k u^k with u = (x - center) / scale.
struct Polynomial {
    double center = 0.0;
    double scale = 1.0;
    Eigen::VectorXd coeff;

    double operator()(double x) const {
        const double u = (x - center) / scale;
        double acc = 0.0;
        for (Eigen::Index k = coeff.size() - 1; k >= 0; --k) acc = acc * u + coeff[k];
        return acc;
    }
};

/// Weights 1/sigma^2, or uniform when any sigma is non-positive.
inline Polynomial fit_polynomial(const std::vector<double> &x, const std::vector<double> &y,
                                 const std::vector<double> &sigma, int degree) {
    const auto n = static_cast<Eigen::Index>(x.size());
    degree = std::max(0, std::min<int>(degree, static_cast<int>(n) - 1));
    Polynomial poly;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    poly.center = 0.5 * (*lo + *hi);
    poly.scale = std::max(0.5 * (*hi - *lo), 1e-300);
    bool weighted = true;
    for (double s : sigma) weighted = weighted && s > 0.0;
    Eigen::MatrixXd A(n, degree + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = weighted ? 1.0 / sigma[i] : 1.0;
        const double u = (x[i] - poly.center) / poly.scale;
        double power = 1.0;
        for (int k = 0; k <= degree; ++k) {
            A(i, k) = w * power;
            power *= u;
        }
        b[i] = w * y[i];
    }
    poly.coeff = A.colPivHouseholderQr().solve(b);
    return poly;
}

// ---- Binder crossings ------------------------------------------------

struct CrossingResult {
    double L1 = 0.0;
    double L2 = 0.0;
    double crossing = 0.0;
    double error = 0.0;
    int bootstrap_used = 0;
};

struct CrossingFailure {
    double L1 = 0.0;
    double L2 = 0.0;
    std::string reason;
};

struct Extrapolation {
    double value = 0.0;
    double error = 0.0;
    std::string method;
};

struct CrossingAnalysis {
    std::vector<CrossingResult> pairs;
    std::vector<CrossingFailure> failures;
    std::optional<Extrapolation> extrapolated;
};

struct CrossingOptions {
    int global_degree = 3;
    int local_degree = 2;
    int local_points = 5;
    int bootstrap = 200;
    uint64_t seed = 12345;
};

namespace detail {

struct Series {
    std::vector<double> x, y, s;
};

inline Series restrict(const Curve &c, double lo, double hi) {
    Series out;
    for (const auto &pt : c.points)
        if (pt.x >= lo && pt.x <= hi) {
            out.x.push_back(pt.x);
            out.y.push_back(pt.y);
            out.s.push_back(pt.sigma);
        }
    return out;
}

inline Series nearest(const Series &s, double x0, int k) {
    std::vector<size_t> idx(s.x.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return std::abs(s.x[a] - x0) < std::abs(s.x[b] - x0); });
    idx.resize(std::min<size_t>(idx.size(), static_cast<size_t>(k)));
    std::sort(idx.begin(), idx.end());
    Series out;
    for (size_t i : idx) {
        out.x.push_back(s.x[i]);
        out.y.push_back(s.y[i]);
        out.s.push_back(s.s[i]);
    }
    return out;
}

template <class F>
std::optional<double> bisect_root(F f, double a, double b) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) return std::nullopt;
    const double tol = 1e-14 * std::max({1.0, std::abs(a), std::abs(b)});
    for (int it = 0; it < 200 && std::abs(b - a) > tol; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Crossing of two curves restricted to their common x range.
inline std::optional<double> crossing_once(const Series &a, const Series &b, double lo, double hi,
                                           const CrossingOptions &opt) {
    const Polynomial fa = fit_polynomial(a.x, a.y, a.s, opt.global_degree);
    const Polynomial fb = fit_polynomial(b.x, b.y, b.s, opt.global_degree);
    auto diff = [&](double x) { return fa(x) - fb(x); };
    constexpr int kGrid = 400;
    std::optional<double> best;
    double best_slope = -1.0;
    double prev_x = lo, prev = diff(lo);
    for (int g = 1; g <= kGrid; ++g) {
        const double x = lo + (hi - lo) * g / kGrid;
        const double cur = diff(x);
        if ((prev > 0) != (cur > 0) || cur == 0.0) {
            if (auto r = bisect_root(diff, prev_x, x)) {
                const double slope = std::abs(cur - prev);
                if (slope > best_slope) {
                    best_slope = slope;
                    best = r;
                }
            }
        }
        prev_x = x;
        prev = cur;
    }
    if (!best) return std::nullopt;

    // Refine with low-order fits to the points nearest the global root.
    const Series la = nearest(a, *best, opt.local_points);
    const Series lb = nearest(b, *best, opt.local_points);
    const Polynomial pa = fit_polynomial(la.x, la.y, la.s, opt.local_degree);
    const Polynomial pb = fit_polynomial(lb.x, lb.y, lb.s, opt.local_degree);
    auto local = [&](double x) { return pa(x) - pb(x); };
    const double wlo = std::max({lo, *std::min_element(la.x.begin(), la.x.end()),
                                 *std::min_element(lb.x.begin(), lb.x.end())});
    const double whi = std::min({hi, *std::max_element(la.x.begin(), la.x.end()),
                                 *std::max_element(lb.x.begin(), lb.x.end())});
    if (whi > wlo)
        if (auto r = bisect_root(local, wlo, whi)) return r;
    return best;
}

}  // namespace detail

/// Pairwise crossings of R2(x) curves plus a weighted linear extrapolation of
/// the pair crossings against 1 / mean(L1, L2).
inline CrossingAnalysis find_binder_crossing(const std::vector<Curve> &curves, const CrossingOptions &opt = {}) {
    if (curves.size() < 2) throw Error(ErrorKind::DegenerateData, "crossing analysis needs at least two sizes");
    for (const Curve &c : curves)
        if (c.points.size() < 4) throw Error(ErrorKind::DegenerateData, "every curve needs at least 4 points");
    std::vector<Curve> sorted = curves;
    std::sort(sorted.begin(), sorted.end(), [](const Curve &a, const Curve &b) { return a.L < b.L; });

    CrossingAnalysis out;
    Rng rng(opt.seed);
    for (size_t i = 0; i < sorted.size(); ++i) {
        for (size_t j = i + 1; j < sorted.size(); ++j) {
            const Curve &ca = sorted[i], &cb = sorted[j];
            auto range = [](const Curve &c) {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (const auto &p : c.points) {
                    lo = std::min(lo, p.x);
                    hi = std::max(hi, p.x);
                }
                return std::pair{lo, hi};
            };
            const auto [alo, ahi] = range(ca);
            const auto [blo, bhi] = range(cb);
            const double lo = std::max(alo, blo), hi = std::min(ahi, bhi);
            const detail::Series sa = detail::restrict(ca, lo, hi), sb = detail::restrict(cb, lo, hi);
            if (!(hi > lo) || sa.x.size() < 2 || sb.x.size() < 2) {
                out.failures.push_back({ca.L, cb.L, "x ranges do not overlap"});
                continue;
            }
            const auto root = detail::crossing_once(sa, sb, lo, hi, opt);
            if (!root) {
                out.failures.push_back({ca.L, cb.L, "curve difference has no sign change in range"});
                continue;
            }
            CrossingResult res{ca.L, cb.L, *root, 0.0, 0};
            double sum = 0.0, sum2 = 0.0;
            for (int b = 0; b < opt.bootstrap; ++b) {
                detail::Series ra = sa, rb = sb;
                for (size_t k = 0; k < ra.y.size(); ++k) ra.y[k] += ra.s[k] * rng.normal();
                for (size_t k = 0; k < rb.y.size(); ++k) rb.y[k] += rb.s[k] * rng.normal();
                if (auto r = detail::crossing_once(ra, rb, lo, hi, opt)) {
                    sum += *r;
                    sum2 += *r * *r;
                    ++res.bootstrap_used;
                }
            }
            if (res.bootstrap_used > 1) {
                const double n = res.bootstrap_used;
                res.error = std::sqrt(std::max(0.0, (sum2 - sum * sum / n) / (n - 1.0)));
            }
            res.error = std::max(res.error, 1e-12 * std::max(1.0, std::abs(res.crossing)));
            out.pairs.push_back(res);
        }
    }

    if (!out.pairs.empty()) {
        // Weighted least squares of crossing = a + b / L_mean.
        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto &r : out.pairs) {
            const double w = 1.0 / (r.error * r.error);
            const double u = 2.0 / (r.L1 + r.L2);
            sw += w;
            sx += w * u;
            sy += w * r.crossing;
            sxx += w * u * u;
            sxy += w * u * r.crossing;
        }
        const double det = sw * sxx - sx * sx;
        if (out.pairs.size() >= 2 && det > 1e-12 * sw * sxx) {
            const double a = (sxx * sy - sx * sxy) / det;
            out.extrapolated = Extrapolation{a, std::sqrt(sxx / det), "linear-in-1/L_mean"};
        } else {
            out.extrapolated = Extrapolation{sy / sw, std::sqrt(1.0 / sw), "weighted-mean"};
        }
    }
    return out;
}

// ---- data collapse -----------------------------------------------------

struct CollapseFit {
    double x_c = 0.0;
    double nu = 1.0;
    double beta = 0.0;
    double beta_over_nu = 0.0;
    double cost = 0.0;
    double x_c_err = 0.0;
    double nu_err = 0.0;
    double beta_err = 0.0;
    double beta_over_nu_err = 0.0;
    double L_min = 0.0;
    int n_sizes = 0;
    int n_points = 0;
    bool converged = false;
};

struct CollapseOptions {
    int degree = 7;
    int bootstrap = 200;
    int starts = 8;
    int max_iterations = 4000;
    uint64_t seed = 2024;
};

struct CollapseParams {
    double x_c;
    double nu;
    double beta_over_nu;
};

/// Master-curve cost at fixed exponents: points mapped to
/// x_L = (x - x_c) / x_c * L^(1/nu), y_L = y * L^(beta/nu), one polynomial
/// fitted to the pooled set, cost = mean squared error-normalized residual.
/// Without errors the residual sum is normalized by the spread of y_L instead.
inline double collapse_cost(const std::vector<Curve> &data, const CollapseParams &par, int degree) {
    if (!(par.nu > 0.0) || par.x_c == 0.0 || !std::isfinite(par.x_c) || !std::isfinite(par.beta_over_nu))
        return std::numeric_limits<double>::infinity();
    std::vector<double> X, Y, S;
    bool weighted = true;
    for (const Curve &c : data) {
        const double sx = std::pow(c.L, 1.0 / par.nu);
        const double sy = std::pow(c.L, par.beta_over_nu);
        for (const auto &pt : c.points) {
            X.push_back((pt.x - par.x_c) / par.x_c * sx);
            Y.push_back(pt.y * sy);
            S.push_back(pt.sigma * sy);
            weighted = weighted && pt.sigma > 0.0;
        }
    }
    if (!weighted) std::fill(S.begin(), S.end(), 0.0);
    const int deg = std::min<int>(degree, static_cast<int>(X.size()) - 2);
    const Polynomial f = fit_polynomial(X, Y, S, deg);
    double res = 0.0;
    for (size_t i = 0; i < X.size(); ++i) {
        const double r = Y[i] - f(X[i]);
        res += weighted ? (r / S[i]) * (r / S[i]) : r * r;
    }
    if (weighted) return res / static_cast<double>(X.size());
    double mean = 0.0;
    for (double y : Y) mean += y;
    mean /= static_cast<double>(Y.size());
    double spread = 0.0;
    for (double y : Y) spread += (y - mean) * (y - mean);
    return spread > 0.0 ? res / spread : res;
}

namespace detail {

struct CostContext {
    const std::vector<Curve> *data;
    int degree;
};

inline CollapseParams unpack(const gsl_vector *v) {
    return {gsl_vector_get(v, 0), std::exp(gsl_vector_get(v, 1)), gsl_vector_get(v, 2)};
}

inline double gsl_cost(const gsl_vector *v, void *ctx) {
    const auto *c = static_cast<const CostContext *>(ctx);
    const double cost = collapse_cost(*c->data, unpack(v), c->degree);
    return std::isfinite(cost) ? cost : 1e300;
}

struct SimplexResult {
    CollapseParams params;
    double cost;
    bool converged;
};

inline SimplexResult minimize_collapse(const std::vector<Curve> &data, const CollapseParams &start, int degree,
                                       int max_iterations) {
    CostContext ctx{&data, degree};
    gsl_multimin_function fn{&gsl_cost, 3, &ctx};
    gsl_vector *x = gsl_vector_alloc(3);
    gsl_vector *step = gsl_vector_alloc(3);
    gsl_vector_set(x, 0, start.x_c);
    gsl_vector_set(x, 1, std::log(start.nu));
    gsl_vector_set(x, 2, start.beta_over_nu);
    gsl_vector_set(step, 0, std::max(0.02 * std::abs(start.x_c), 1e-4));
    gsl_vector_set(step, 1, 0.2);
    gsl_vector_set(step, 2, 0.1);
    gsl_multimin_fminimizer *s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    bool converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        const double size = gsl_multimin_fminimizer_size(s);
        if (gsl_multimin_test_size(size, 1e-9) == GSL_SUCCESS) {
            converged = true;
            break;
        }
    }
    SimplexResult out{unpack(s->x), s->fval, converged};
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(x);
    gsl_vector_free(step);
    return out;
}

inline void silence_gsl() {
    static const bool once = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)once;
}

}  // namespace detail

/// Derivative-free simplex minimization of the collapse cost, multi-started
/// around `init`, with parametric bootstrap errors (each point redrawn from
/// N(y, sigma^2)). Uses only sizes L >= L_min.
inline CollapseFit data_collapse(const std::vector<Curve> &datasets, const CollapseParams &init, double L_min = 0.0,
                                 const CollapseOptions &opt = {}) {
    detail::silence_gsl();
    std::vector<Curve> data;
    for (const Curve &c : datasets)
        if (c.L >= L_min) data.push_back(c);
    if (data.size() < 3) throw Error(ErrorKind::DegenerateData, "data collapse needs at least 3 sizes >= L_min");
    std::sort(data.begin(), data.end(), [](const Curve &a, const Curve &b) { return a.L < b.L; });
    int n_points = 0;
    for (const Curve &c : data) n_points += static_cast<int>(c.points.size());
    if (n_points < opt.degree + 3) throw Error(ErrorKind::DegenerateData, "too few points for the master-curve degree");

    Rng rng(opt.seed);
    detail::SimplexResult best{init, std::numeric_limits<double>::infinity(), false};
    for (int s = 0; s < std::max(1, opt.starts); ++s) {
        CollapseParams start = init;
        if (s > 0) {
            start.x_c *= 1.0 + 0.02 * (2.0 * rng.uniform() - 1.0);
            start.nu *= std::exp(0.3 * (2.0 * rng.uniform() - 1.0));
            start.beta_over_nu += 0.15 * (2.0 * rng.uniform() - 1.0);
        }
        auto r = detail::minimize_collapse(data, start, opt.degree, opt.max_iterations);
        if (r.cost < best.cost) best = r;
    }
    // Polish from the best point.
    {
        auto r = detail::minimize_collapse(data, best.params, opt.degree, opt.max_iterations);
        if (r.cost <= best.cost) best = r;
    }

    CollapseFit fit;
    fit.x_c = best.params.x_c;
    fit.nu = best.params.nu;
    fit.beta_over_nu = best.params.beta_over_nu;
    fit.beta = fit.beta_over_nu * fit.nu;
    fit.cost = best.cost;
    fit.converged = best.converged;
    fit.L_min = data.front().L;
    fit.n_sizes = static_cast<int>(data.size());
    fit.n_points = n_points;

    bool has_errors = true;
    for (const Curve &c : data)
        for (const auto &pt : c.points) has_errors = has_errors && pt.sigma > 0.0;
    if (has_errors && opt.bootstrap > 1) {
        std::vector<double> xc, nu, bn, be;
        for (int b = 0; b < opt.bootstrap; ++b) {
            std::vector<Curve> resampled = data;
            for (Curve &c : resampled)
                for (auto &pt : c.points) pt.y += pt.sigma * rng.normal();
            auto r = detail::minimize_collapse(resampled, best.params, opt.degree, opt.max_iterations);
            if (!std::isfinite(r.cost)) continue;
            xc.push_back(r.params.x_c);
            nu.push_back(r.params.nu);
            bn.push_back(r.params.beta_over_nu);
            be.push_back(r.params.beta_over_nu * r.params.nu);
        }
        auto sd = [](const std::vector<double> &v) {
            if (v.size() < 2) return 0.0;
            double m = 0.0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            double s = 0.0;
            for (double x : v) s += (x - m) * (x - m);
            return std::sqrt(s / static_cast<double>(v.size() - 1));
        };
        fit.x_c_err = sd(xc);
        fit.nu_err = sd(nu);
        fit.beta_over_nu_err = sd(bn);
        fit.beta_err = sd(be);
    }
    return fit;
}

struct StabilityReport {
    std::vector<CollapseFit> fits;
    std::vector<std::string> notices;
    double x_c_drift = 0.0;
    double nu_drift = 0.0;
    double beta_drift = 0.0;
    double beta_over_nu_drift = 0.0;
};

/// Repeats the collapse with progressively larger L_min and reports the
/// spread (max - min) of every fitted quantity.
inline StabilityReport stability_sweep(const std::vector<Curve> &datasets, const std::vector<double> &L_mins,
                                       const CollapseParams &init, const CollapseOptions &opt = {}) {
    StabilityReport rep;
    for (double lmin : L_mins) {
        int sizes = 0;
        for (const Curve &c : datasets) sizes += c.L >= lmin ? 1 : 0;
        if (sizes < 3) {
            rep.notices.push_back("L_min=" + std::to_string(lmin) + " skipped: only " + std::to_string(sizes) +
                                  " sizes remain");
            continue;
        }
        rep.fits.push_back(data_collapse(datasets, init, lmin, opt));
    }
    auto drift = [&](auto get) {
        if (rep.fits.empty()) return 0.0;
        double lo = get(rep.fits.front()), hi = lo;
        for (const auto &f : rep.fits) {
            lo = std::min(lo, get(f));
            hi = std::max(hi, get(f));
        }
        return hi - lo;
    };
    rep.x_c_drift = drift([](const CollapseFit &f) { return f.x_c; });
    rep.nu_drift = drift([](const CollapseFit &f) { return f.nu; });
    rep.beta_drift = drift([](const CollapseFit &f) { return f.beta; });
    rep.beta_over_nu_drift = drift([](const CollapseFit &f) { return f.beta_over_nu; });
    return rep;
}

// ---- critical surface --------------------------------------------------

struct SurfaceInput {
    double fixed_a = 0.0;  // e.g. tau
    double fixed_b = 0.0;  // e.g. h or g
    std::vector<Curve> curves;
};

struct SurfaceRow {
    double fixed_a = 0.0;
    double fixed_b = 0.0;
    double critical = std::numeric_limits<double>::quiet_NaN();
    double error = std::numeric_limits<double>::quiet_NaN();
    std::string status;  // "ok", "no-crossing", or an error message
};

/// One row per grid point; points without a crossing are marked, never fatal.
inline std::vector<SurfaceRow> critical_surface_scan(const std::vector<SurfaceInput> &grid,
                                                     const CrossingOptions &opt = {}) {
    std::vector<SurfaceRow> rows;
    for (const SurfaceInput &pt : grid) {
        SurfaceRow row;
        row.fixed_a = pt.fixed_a;
        row.fixed_b = pt.fixed_b;
        try {
            const CrossingAnalysis ca = find_binder_crossing(pt.curves, opt);
            if (ca.extrapolated) {
                row.critical = ca.extrapolated->value;
                row.error = ca.extrapolated->error;
                row.status = "ok";
            } else {
                row.status = "no-crossing";
            }
        } catch (const Error &e) {
            row.status = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mdite::analysis
