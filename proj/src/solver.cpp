#include "robo_mv/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "robo_mv/error.hpp"
#include "robo_mv/parallel.hpp"
#include "robo_mv/quadrature.hpp"

namespace robo_mv {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    if (n == 1) {
        v[0] = 0.5 * (lo + hi);
        return v;
    }
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

// Lower node and weight on the upper node along one uniform axis.
struct Axis {
    std::size_t i;
    double t;
};

Axis locate(const std::vector<double>& g, double x, double warp, bool& clamped) {
    const std::size_t n = g.size();
    if (n == 1) return {0, 0.0};
    const double h = (g.back() - g.front()) / static_cast<double>(n - 1);
    const double tol = 1e-9 * h;
    if (x <= g.front()) {
        if (x < g.front() - tol) clamped = true;
        return {0, 0.0};
    }
    if (x >= g.back()) {
        if (x > g.back() + tol) clamped = true;
        return {n - 2, 1.0};
    }
    const std::size_t i = std::min(static_cast<std::size_t>((x - g.front()) / h), n - 2);
    if (warp == 0.0) return {i, (x - g[i]) / h};
    return {i, std::expm1(warp * (x - g[i])) / std::expm1(warp * h)};
}

struct Stencil {
    int count = 0;
    std::size_t idx[8];
    double w[8];

    double apply(const std::vector<double>& f) const {
        double s = 0.0;
        for (int c = 0; c < count; ++c) s += w[c] * f[idx[c]];
        return s;
    }
};

Stencil make_stencil(const StateGrid& g, Axis ax, Axis ap, Axis ac, int y) {
    Stencil st;
    const int nx = g.log_xi.size() > 1 ? 2 : 1;
    const int np = g.prev.size() > 1 ? 2 : 1;
    const int nc = g.cur.size() > 1 ? 2 : 1;
    for (int dx = 0; dx < nx; ++dx) {
        const double wx = dx ? ax.t : (nx == 2 ? 1.0 - ax.t : 1.0);
        if (wx == 0.0) continue;
        for (int dp = 0; dp < np; ++dp) {
            const double wp = dp ? ap.t : (np == 2 ? 1.0 - ap.t : 1.0);
            if (wp == 0.0) continue;
            for (int dc = 0; dc < nc; ++dc) {
                const double wc = dc ? ac.t : (nc == 2 ? 1.0 - ac.t : 1.0);
                if (wc == 0.0) continue;
                st.idx[st.count] = g.index(ax.i + dx, ap.i + dp, ac.i + dc, y);
                st.w[st.count] = wx * wp * wc;
                ++st.count;
            }
        }
    }
    return st;
}

struct Counters {
    std::uint64_t lookups = 0;
    std::uint64_t clamped = 0;
};

// E over the summed interaction shock of f(log xi + E, prev, 0, y), tabulated on the
// current-sum zero node. Other entries are copied through unchanged.
std::vector<double> smooth_field(const StateGrid& g, const std::vector<double>& f, const QuadratureRule& shock,
                                 Counters& counters) {
    std::vector<double> out = f;
    const std::size_t k = g.cur_zero();
    for (int y = 0; y < g.regimes; ++y)
        for (std::size_t i = 0; i < g.log_xi.size(); ++i)
            for (std::size_t j = 0; j < g.prev.size(); ++j) {
                double s = 0.0;
                for (Eigen::Index q = 0; q < shock.size(); ++q) {
                    bool clamped = false;
                    const Axis ax = locate(g.log_xi, g.log_xi[i] + shock.nodes(q), g.xi_warp, clamped);
                    double v = f[g.index(ax.i, j, k, y)];
                    if (g.log_xi.size() > 1) v += ax.t * (f[g.index(ax.i + 1, j, k, y)] - v);
                    s += shock.weights(q) * v;
                    ++counters.lookups;
                    counters.clamped += clamped;
                }
                out[g.index(i, j, k, y)] = s;
            }
    return out;
}

enum class NextKind { Terminal, Interaction, Plain };

NextKind next_kind(const PolicyTables& pt, int n) {
    if (n + 1 == pt.T) return NextKind::Terminal;
    return pt.profile.is_interaction(n + 1) ? NextKind::Interaction : NextKind::Plain;
}

// Calls f(weight, excess_return, stencil) for each quadrature successor of grid node (i,j,k,y)
// at time n. For Interaction the stencil addresses smoothed fields; for Terminal it is empty.
template <class F>
void for_each_successor(const PolicyTables& pt, const QuadratureRule& gh, int n, std::size_t i, std::size_t j,
                        std::size_t k, int y, Counters& counters, F&& f) {
    const StateGrid& g = pt.grid;
    const MarketParams& mk = pt.market;
    const RiskProfileParams& pr = pt.profile;
    const NextKind kind = next_kind(pt, n);
    const double sigma = mk.sigma_step(y);
    const double mex = mk.excess_mean(y);
    const Axis ax_node{i, 0.0};
    const Axis ap_node{j, 0.0};
    const Axis ac_zero{g.cur_zero(), 0.0};
    for (int y2 = 0; y2 < g.regimes; ++y2) {
        const double py = mk.transition(y, y2);
        if (!(py > 0.0)) continue;
        for (Eigen::Index q = 0; q < gh.size(); ++q) {
            const double e = sigma * gh.nodes(q);
            const double w = py * gh.weights(q);
            Stencil st;
            if (kind == NextKind::Interaction) {
                const double cur_new = g.cur[k] + e;
                const double lx = g.log_xi[i] + pr.beta * (g.prev[j] - cur_new) / pr.phi;
                bool clamped = false;
                const Axis ax = locate(g.log_xi, lx, g.xi_warp, clamped);
                const Axis ap = locate(g.prev, cur_new, g.prev_warp, clamped);
                st = make_stencil(g, ax, ap, ac_zero, y2);
                ++counters.lookups;
                counters.clamped += clamped;
            } else if (kind == NextKind::Plain) {
                bool clamped = false;
                const Axis ac = locate(g.cur, g.cur[k] + e, g.cur_warp, clamped);
                st = make_stencil(g, ax_node, ap_node, ac, y2);
                ++counters.lookups;
                counters.clamped += clamped;
            }
            f(w, mex + e, st);
        }
    }
}

struct NextFields {
    const std::vector<double>* a = nullptr;
    const std::vector<double>* b = nullptr;
};

StepMoments moments_at(const PolicyTables& pt, const QuadratureRule& gh, int n, std::size_t i, std::size_t j,
                       std::size_t k, int y, const NextFields& next, Counters& counters) {
    StepMoments m;
    const bool terminal = next_kind(pt, n) == NextKind::Terminal;
    for_each_successor(pt, gh, n, i, j, k, y, counters, [&](double w, double z, const Stencil& st) {
        const double a = terminal ? 1.0 : st.apply(*next.a);
        const double b = terminal ? 1.0 : st.apply(*next.b);
        m.ma += w * a;
        m.maz += w * a * z;
        m.mb += w * b;
        m.mbz += w * b * z;
        m.mbz2 += w * b * z * z;
    });
    return m;
}

// Decompose a flat index into (i, j, k, y).
struct NodeIndex {
    std::size_t i, j, k;
    int y;
};

NodeIndex split(const StateGrid& g, std::size_t idx) {
    NodeIndex r;
    r.k = idx % g.cur.size();
    idx /= g.cur.size();
    r.j = idx % g.prev.size();
    idx /= g.prev.size();
    r.i = idx % g.log_xi.size();
    r.y = static_cast<int>(idx / g.log_xi.size());
    return r;
}

}  // namespace

ReducedState StateGrid::node(std::size_t idx) const {
    std::size_t k = idx % cur.size();
    idx /= cur.size();
    std::size_t j = idx % prev.size();
    idx /= prev.size();
    std::size_t i = idx % log_xi.size();
    return {std::exp(log_xi[i]), prev[j], cur[k], static_cast<int>(idx / log_xi.size())};
}

double PolicyTables::gamma(int n, const ReducedState& s) const {
    return std::exp(profile.eta_at(n, T)) * s.xi * profile.gamma_bar_at(n, s.regime);
}

double PolicyTables::gamma(int n, std::size_t node) const { return gamma(n, grid.node(node)); }

double PolicyTables::interpolate(const std::vector<double>& field, const ReducedState& s, bool* clamped) const {
    bool c = false;
    const Axis ax = locate(grid.log_xi, std::log(s.xi), grid.xi_warp, c);
    const Axis ap = locate(grid.prev, s.prev_sum, grid.prev_warp, c);
    const Axis ac = locate(grid.cur, s.cur_sum, grid.cur_warp, c);
    if (clamped) *clamped = c;
    return make_stencil(grid, ax, ap, ac, s.regime).apply(field);
}

StateGrid make_grid(const MarketParams& market, const RiskProfileParams& profile, int T, const GridSpec& spec) {
    StateGrid g;
    g.regimes = market.num_states();
    double sigma_max = 0.0;
    for (int y = 0; y < g.regimes; ++y) sigma_max = std::max(sigma_max, market.sigma_step(y));

    int count = spec.xi_nodes;
    double lo, hi;
    if (spec.xi_min > 0.0 && spec.xi_max > 0.0) {
        lo = std::log(spec.xi_min);
        hi = std::log(spec.xi_max);
    } else {
        // Base span [gamma0/8, 8 gamma0], widened to 4 SDs of log xi over the horizon plus the
        // shock drift, keeping the base node density.
        const double base = std::log(8.0);
        const double p = profile.p_eps, s2 = profile.sigma_eps * profile.sigma_eps;
        const double var_step = p * s2 + p * (1.0 - p) * 0.25 * s2 * s2;
        const double bias_var = profile.beta * profile.beta * sigma_max * sigma_max / profile.phi;
        const double half = std::max(base, 4.0 * std::sqrt(T * var_step + bias_var) + 0.5 * T * p * s2);
        if (count > 1 && half > base) count = static_cast<int>(std::ceil(2.0 * half / (2.0 * base / (count - 1)))) + 1;
        if (count > 1 && count % 2 == 0) ++count;
        lo = std::log(profile.gamma0) - half;
        hi = std::log(profile.gamma0) + half;
        if (count == 1) lo = hi = std::log(profile.gamma0);
    }
    if (count < 1 || (count > 1 && !(hi > lo))) fail(ErrorKind::Config, "BadGrid", "xi grid must be increasing");
    g.log_xi = linspace(lo, hi, count);

    if (profile.beta == 0.0) {
        g.prev = {0.0};
        g.cur = {0.0};
    } else {
        int nz = std::max(spec.zsum_nodes, 3);
        if (nz % 2 == 0) ++nz;
        const double span = spec.zsum_span_sd * sigma_max * std::sqrt(static_cast<double>(profile.phi));
        g.prev = linspace(-span, span, nz);
        g.prev[g.prev_zero()] = 0.0;
        g.cur = profile.phi == 1 ? std::vector<double>{0.0} : g.prev;
    }
    // Moments behave roughly like affine functions of 1/kappa at the next interaction, and
    // 1/kappa' = exp(-log xi) * exp(-beta prev / phi) * exp(beta cur / phi).
    if (spec.warped) {
        g.xi_warp = -1.0;
        g.prev_warp = -profile.beta / profile.phi;
        g.cur_warp = profile.beta / profile.phi;
    }
    return g;
}

double allocation(const StepMoments& m, double R, double gamma) {
    const double den = m.mbz2 - m.maz * m.maz;
    if (!(den > 0.0))
        fail(ErrorKind::Numerical, "DegenerateVariance",
             "E[b'Z^2] - E[a'Z]^2 = " + std::to_string(den) + " is not positive");
    return (m.maz - R * gamma * (m.mbz - m.ma * m.maz)) / (gamma * den);
}

double allocation_independent(double ma, double mb, double gamma, double R, double mex, double var) {
    const double jensen = mb - ma * ma;
    const double den = mb + mex * mex / var * jensen;
    if (!(den > 0.0) || !(var > 0.0))
        fail(ErrorKind::Numerical, "DegenerateVariance", "independent allocation denominator is not positive");
    return mex / (gamma * var) * (ma - R * gamma * jensen) / den;
}

MomentPair update_ab(const StepMoments& m, double pi, double R) {
    return {R * m.ma + pi * m.maz, R * R * m.mb + 2.0 * R * pi * m.mbz + pi * pi * m.mbz2};
}

double constrain(double pi, double lower, double upper) { return std::clamp(pi, lower, upper); }

double liquidation_overlay(double wealth, double pi) { return wealth < 0.0 ? 0.0 : pi * wealth; }

PolicyTables solve(const MarketParams& market, const RiskProfileParams& profile, int T, const GridSpec& spec) {
    require_valid(market);
    if (T < 1) fail(ErrorKind::Config, "BadHorizon", "T must be >= 1");
    require_valid(profile, market.num_states(), T);
    if (spec.pipeline == Pipeline::Independent && profile.beta != 0.0)
        fail(ErrorKind::Config, "IndependenceViolated", "the independent pipeline requires beta = 0");
    if (!(spec.lower <= spec.upper)) fail(ErrorKind::Config, "BadBounds", "lower bound exceeds upper bound");

    PolicyTables pt;
    pt.market = market;
    pt.profile = profile;
    pt.spec = spec;
    pt.T = T;
    pt.grid = make_grid(market, profile, T, spec);
    pt.slices.resize(static_cast<std::size_t>(T));

    const QuadratureRule gh = gauss_hermite(spec.quad_points);
    const QuadratureRule shock = shock_mixture(profile.phi, profile.p_eps, profile.sigma_eps, spec.quad_points);
    const StateGrid& g = pt.grid;
    const std::size_t size = g.size();
    const std::size_t kz = g.cur_zero();

    std::atomic<std::uint64_t> lookups{0}, clamped{0};
    std::vector<double> smooth_a, smooth_b;
    for (int n = T - 1; n >= 0; --n) {
        NextFields next;
        const NextKind kind = next_kind(pt, n);
        if (kind == NextKind::Interaction) {
            Counters c;
            smooth_a = smooth_field(g, pt.slices[n + 1].a, shock, c);
            smooth_b = smooth_field(g, pt.slices[n + 1].b, shock, c);
            lookups += c.lookups;
            clamped += c.clamped;
            next = {&smooth_a, &smooth_b};
        } else if (kind == NextKind::Plain) {
            next = {&pt.slices[n + 1].a, &pt.slices[n + 1].b};
        }

        PolicySlice& slice = pt.slices[n];
        slice.pi.assign(size, 0.0);
        slice.a.assign(size, 0.0);
        slice.b.assign(size, 0.0);
        slice.value.assign(size, 0.0);
        // At interaction times the current window sum is reset, so only its zero node is reachable.
        const bool reset = profile.is_interaction(n) && g.cur.size() > 1;

        parallel_for(size, spec.threads, [&](std::size_t idx) {
            const NodeIndex nd = split(g, idx);
            if (reset && nd.k != kz) return;
            Counters c;
            const StepMoments m = moments_at(pt, gh, n, nd.i, nd.j, nd.k, nd.y, next, c);
            lookups += c.lookups;
            clamped += c.clamped;

            const double R = market.gross_rate(nd.y);
            const double gamma = pt.gamma(n, idx);
            double pi;
            MomentPair ab;
            if (spec.pipeline == Pipeline::Independent) {
                const ExcessMoments em = excess_moments(market, nd.y);
                pi = constrain(allocation_independent(m.ma, m.mb, gamma, R, em.mean, em.variance), spec.lower,
                               spec.upper);
                const double g1 = R + em.mean * pi;
                ab = {g1 * m.ma, (g1 * g1 + em.variance * pi * pi) * m.mb};
            } else {
                pi = constrain(allocation(m, R, gamma), spec.lower, spec.upper);
                ab = update_ab(m, pi, R);
            }
            slice.pi[idx] = pi;
            slice.a[idx] = ab.a;
            slice.b[idx] = ab.b;
            slice.value[idx] = ab.a - 1.0 - 0.5 * gamma * (ab.b - ab.a * ab.a);
        });

        if (reset)
            for (std::size_t idx = 0; idx < size; ++idx) {
                const NodeIndex nd = split(g, idx);
                if (nd.k == kz) continue;
                const std::size_t src = g.index(nd.i, nd.j, kz, nd.y);
                slice.pi[idx] = slice.pi[src];
                slice.a[idx] = slice.a[src];
                slice.b[idx] = slice.b[src];
                slice.value[idx] = slice.value[src];
            }
    }
    pt.diagnostics.lookups = lookups;
    pt.diagnostics.clamped = clamped;
    return pt;
}

StepMoments step_moments(const PolicyTables& pt, int n, std::size_t node) {
    if (n < 0 || n >= pt.T) fail(ErrorKind::Config, "BadTime", "n must lie in [0, T)");
    const QuadratureRule gh = gauss_hermite(pt.spec.quad_points);
    const NodeIndex nd = split(pt.grid, node);
    Counters c;
    NextFields next;
    std::vector<double> sa, sb;
    switch (next_kind(pt, n)) {
    case NextKind::Terminal:
        break;
    case NextKind::Interaction: {
        const QuadratureRule shock =
            shock_mixture(pt.profile.phi, pt.profile.p_eps, pt.profile.sigma_eps, pt.spec.quad_points);
        sa = smooth_field(pt.grid, pt.slices.at(n + 1).a, shock, c);
        sb = smooth_field(pt.grid, pt.slices.at(n + 1).b, shock, c);
        next = {&sa, &sb};
        break;
    }
    case NextKind::Plain:
        next = {&pt.slices.at(n + 1).a, &pt.slices.at(n + 1).b};
        break;
    }
    return moments_at(pt, gh, n, nd.i, nd.j, nd.k, nd.y, next, c);
}

std::vector<std::vector<double>> moment_m(int m, const PolicyTables& pt) {
    if (m < 1) fail(ErrorKind::Config, "BadMoment", "m must be >= 1");
    const StateGrid& g = pt.grid;
    const std::size_t size = g.size();
    const std::size_t kz = g.cur_zero();
    const QuadratureRule gh = gauss_hermite(pt.spec.quad_points);
    const QuadratureRule shock =
        shock_mixture(pt.profile.phi, pt.profile.p_eps, pt.profile.sigma_eps, pt.spec.quad_points);

    std::vector<std::vector<double>> out(static_cast<std::size_t>(pt.T) + 1);
    out[pt.T].assign(size, 1.0);
    std::vector<double> smooth;
    for (int n = pt.T - 1; n >= 0; --n) {
        const NextKind kind = next_kind(pt, n);
        Counters c;
        const std::vector<double>* next = &out[n + 1];
        if (kind == NextKind::Interaction) {
            smooth = smooth_field(g, out[n + 1], shock, c);
            next = &smooth;
        }
        std::vector<double>& cur = out[n];
        cur.assign(size, 0.0);
        const bool reset = pt.profile.is_interaction(n) && g.cur.size() > 1;
        parallel_for(size, pt.spec.threads, [&](std::size_t idx) {
            const NodeIndex nd = split(g, idx);
            if (reset && nd.k != kz) return;
            const double R = pt.market.gross_rate(nd.y);
            const double pi = pt.slices[n].pi[idx];
            Counters local;
            double s = 0.0;
            for_each_successor(pt, gh, n, nd.i, nd.j, nd.k, nd.y, local, [&](double w, double z, const Stencil& st) {
                const double v = kind == NextKind::Terminal ? 1.0 : st.apply(*next);
                s += w * std::pow(R + z * pi, m) * v;
            });
            cur[idx] = s;
        });
        if (reset)
            for (std::size_t idx = 0; idx < size; ++idx) {
                const NodeIndex nd = split(g, idx);
                if (nd.k != kz) cur[idx] = cur[g.index(nd.i, nd.j, kz, nd.y)];
            }
    }
    return out;
}

}  // namespace robo_mv
