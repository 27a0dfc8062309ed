// Doubly periodic sinh-Gordon solutions.
//
// The equation dz dzbar u + sinh u = 0 is handled throughout in x,y form,
// (1/4)(u_xx + u_yy) + sinh u = 0, with the quarter written out explicitly.
// Solutions come from Newton iteration (spectrally preconditioned MINRES on
// the symmetric linearization), from a 1-D pendulum-type reduction that
// serves as an independent oracle, from pseudo-arclength continuation off a
// bifurcation of the trivial branch, or from CMCF files.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmcindex/field_io.hpp"
#include "cmcindex/lattice.hpp"

namespace cmcindex {

struct NonConvergence : std::runtime_error {
    double last_residual;
    NonConvergence(const std::string& msg, double res)
        : std::runtime_error(msg), last_residual(res) {}
};

struct DivergedToTrivial : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoBifurcationDetected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolveConfig {
    double newton_tol = 1e-10;  // residual sup-norm target
    int max_iters = 50;
    bool deflation_enabled = false;
    enum class Symmetry { none, even } symmetry = Symmetry::none;
    int continuation_steps = 8;

    // solver internals
    int minres_max_iters = 800;
    double collapse_threshold = 1e-8;
    double seed_nontrivial_threshold = 1e-6;
    double continuation_seed_amplitude = 0.15;
    double continuation_initial_step = 0.05;
};

struct SinhGordonSolution {
    ScalarField u;
    double residual_norm = 0.0;
    std::string branch_tag;  // trivial | continuation | oned-shooting | file | newton
    std::vector<double> residual_history;
};

// (1/4)(u_xx + u_yy) + sinh u, the quantity driven to zero.
inline ScalarField sinh_gordon_residual(const ScalarField& u) {
    SpectralOptions raw;
    raw.alias_threshold = 1.0;  // the solver owns resolution decisions
    ScalarField lap = laplacian_eucl(u, raw);  // -(u_xx+u_yy)
    std::vector<double> r(u.values.size());
    for (size_t i = 0; i < r.size(); ++i)
        r[i] = -0.25 * lap.values[i] + std::sinh(u.values[i]);
    return ScalarField(u.grid, std::move(r));
}

namespace detail {

inline std::vector<double> reflect_even(const Grid& g,
                                        const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (int k = 0; k < g.ny; ++k)
        for (int j = 0; j < g.nx; ++j)
            r[g.index(j, k)] = 0.5 * (v[g.index(j, k)] + v[g.index(-j, -k)]);
    return r;
}

// Applies the Newton operator (1/4)Delta0 + cosh(u)*. on a raw vector.
class NewtonOperator {
public:
    NewtonOperator(const Grid& g, const std::vector<double>& cosh_u)
        : grid_(g), cosh_u_(cosh_u) {}

    void apply(const std::vector<double>& v, std::vector<double>& out) const {
        std::vector<complexd> c(v.size());
        for (size_t i = 0; i < v.size(); ++i) c[i] = v[i];
        fft2_forward(c, grid_.nx, grid_.ny);
        multiply_symbol(c, [](double xi2) { return -0.25 * xi2; });
        fft2_inverse(c, grid_.nx, grid_.ny);
        out.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i)
            out[i] = c[i].real() + cosh_u_[i] * v[i];
    }

    // SPD preconditioner ((1/4)|xi|^2 + 1)^-1.
    void precondition(const std::vector<double>& v,
                      std::vector<double>& out) const {
        std::vector<complexd> c(v.size());
        for (size_t i = 0; i < v.size(); ++i) c[i] = v[i];
        fft2_forward(c, grid_.nx, grid_.ny);
        multiply_symbol(c, [](double xi2) { return 1.0 / (0.25 * xi2 + 1.0); });
        fft2_inverse(c, grid_.nx, grid_.ny);
        out.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out[i] = c[i].real();
    }

private:
    template <typename F>
    void multiply_symbol(std::vector<complexd>& c, F f) const {
        for (int k = 0; k < grid_.ny; ++k) {
            const int q = Grid::signed_mode(k, grid_.ny);
            for (int j = 0; j < grid_.nx; ++j) {
                const int p = Grid::signed_mode(j, grid_.nx);
                double xix, xiy;
                grid_.lattice.wavevector(p, q, xix, xiy);
                c[static_cast<size_t>(k) * grid_.nx + j] *=
                    f(xix * xix + xiy * xiy);
            }
        }
    }

    Grid grid_;
    const std::vector<double>& cosh_u_;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Preconditioned MINRES (Paige-Saunders) for the symmetric indefinite
// Newton systems; returns the iterate after reaching rtol or max_iters.
inline std::vector<double> minres(const NewtonOperator& op,
                                  const std::vector<double>& b, double rtol,
                                  int max_iters) {
    const size_t n = b.size();
    std::vector<double> x(n, 0.0);
    std::vector<double> r1 = b, r2 = b, y;
    op.precondition(r1, y);
    double beta1 = dot(r1, y);
    if (beta1 <= 0.0) return x;
    beta1 = std::sqrt(beta1);

    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0;
    double phibar = beta1, cs = -1.0, sn = 0.0;
    std::vector<double> w(n, 0.0), w2(n, 0.0), v(n);

    for (int iter = 0; iter < max_iters; ++iter) {
        const double s = 1.0 / beta;
        for (size_t i = 0; i < n; ++i) v[i] = s * y[i];
        std::vector<double> Av;
        op.apply(v, Av);
        if (iter >= 1)
            for (size_t i = 0; i < n; ++i) Av[i] -= (beta / oldb) * r1[i];
        const double alfa = dot(v, Av);
        for (size_t i = 0; i < n; ++i) Av[i] -= (alfa / beta) * r2[i];
        r1 = r2;
        r2 = Av;
        op.precondition(r2, y);
        oldb = beta;
        beta = dot(r2, y);
        if (beta < 0.0) beta = 0.0;
        beta = std::sqrt(beta);

        const double oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        double gamma = std::sqrt(gbar * gbar + beta * beta);
        gamma = std::max(gamma, 1e-300);
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;

        const std::vector<double> w1 = w2;
        w2 = w;
        for (size_t i = 0; i < n; ++i)
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        for (size_t i = 0; i < n; ++i) x[i] += phi * w[i];

        if (phibar <= rtol * beta1 || beta <= 1e-300) break;
    }
    return x;
}

}  // namespace detail

// Newton iteration for the sinh-Gordon equation on the grid of the seed.
// Residual history (sup norms, seed first) is recorded on the result.
inline SinhGordonSolution solve(const ScalarField& seed, const SolveConfig& cfg,
                                std::string branch_tag = "newton") {
    if (cfg.newton_tol <= 0.0 || cfg.max_iters < 1)
        throw std::invalid_argument("solve: invalid SolveConfig");
    const Grid& g = seed.grid;
    const bool even = cfg.symmetry == SolveConfig::Symmetry::even;
    const bool nontrivial_wanted =
        seed.max_abs() >= cfg.seed_nontrivial_threshold;

    std::vector<double> u = seed.values;
    if (even) u = detail::reflect_even(g, u);

    auto residual_of = [&](const std::vector<double>& uv) {
        return sinh_gordon_residual(ScalarField(g, uv));
    };

    SinhGordonSolution out;
    out.branch_tag = std::move(branch_tag);

    ScalarField res = residual_of(u);
    double rn = res.max_abs();
    out.residual_history.push_back(rn);

    for (int iter = 0; iter < cfg.max_iters && rn > cfg.newton_tol; ++iter) {
        double unorm = 0.0;
        for (double x : u) unorm = std::max(unorm, std::abs(x));
        if (nontrivial_wanted && unorm < cfg.collapse_threshold)
            throw DivergedToTrivial(
                "solve: iterates collapsed to the trivial solution");

        std::vector<double> cosh_u(u.size());
        for (size_t i = 0; i < u.size(); ++i) cosh_u[i] = std::cosh(u[i]);
        detail::NewtonOperator op(g, cosh_u);

        std::vector<double> rhs(res.values.size());
        for (size_t i = 0; i < rhs.size(); ++i) rhs[i] = -res.values[i];
        const double forcing = std::clamp(rn, 1e-12, 0.1);
        std::vector<double> delta =
            detail::minres(op, rhs, forcing, cfg.minres_max_iters);

        if (cfg.deflation_enabled && nontrivial_wanted) {
            // Farrell-style deflation against u == 0 with mu(u) = 1 + 1/<u,u>:
            // the Newton step scales by 1/(1 - <grad mu, delta>/mu).
            const double uu = detail::dot(u, u);
            if (uu > 0.0) {
                const double mu = 1.0 + 1.0 / uu;
                const double gdot = -2.0 * detail::dot(u, delta) / (uu * uu);
                const double denom = 1.0 - gdot / mu;
                if (std::abs(denom) > 1e-6) {
                    const double tau = 1.0 / denom;
                    for (auto& d : delta) d *= tau;
                }
            }
        }

        // damped update
        double step = 1.0;
        std::vector<double> trial(u.size());
        double trial_rn = rn;
        ScalarField trial_res = res;
        for (int back = 0; back < 8; ++back) {
            for (size_t i = 0; i < u.size(); ++i)
                trial[i] = u[i] + step * delta[i];
            if (even) trial = detail::reflect_even(g, trial);
            trial_res = residual_of(trial);
            trial_rn = trial_res.max_abs();
            if (trial_rn < rn * (1.0 - 1e-4) || trial_rn <= cfg.newton_tol)
                break;
            step *= 0.5;
        }
        u = trial;
        res = trial_res;
        rn = trial_rn;
        out.residual_history.push_back(rn);
    }

    if (rn > cfg.newton_tol)
        throw NonConvergence("solve: Newton did not reach tolerance " +
                                 std::to_string(cfg.newton_tol) + " in " +
                                 std::to_string(cfg.max_iters) + " iterations",
                             rn);

    out.u = ScalarField(g, std::move(u));
    out.residual_norm = rn;
    if (out.u.max_abs() < cfg.collapse_threshold) {
        if (nontrivial_wanted)
            throw DivergedToTrivial(
                "solve: converged to the trivial solution from a nontrivial "
                "seed");
        out.branch_tag = "trivial";
    }
    return out;
}

// --- 1-D reduction: u'' = -4 sinh u, E = u'^2/2 + 4 cosh u ---------------

namespace detail {

// Adaptive Gauss-Kronrod 15(7) on [a,b].
inline double gk15(const std::function<double(double)>& f, double a, double b,
                   double rel_tol, int depth = 0) {
    static const double xgk[8] = {
        0.991455371120813, 0.949107912342759, 0.864864423359769,
        0.741531185599394, 0.586087235467691, 0.405845151377397,
        0.207784955007898, 0.0};
    static const double wgk[8] = {
        0.022935322010529, 0.063092092629979, 0.104790010322250,
        0.140653259715525, 0.169004726639267, 0.190350578064785,
        0.204432940075298, 0.209482141084728};
    static const double wg[4] = {0.129484966168870, 0.279705391489277,
                                 0.381830050505119, 0.417959183673469};
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double kron = wgk[7] * f(c), gauss = wg[3] * f(c);
    for (int i = 0; i < 7; ++i) {
        const double f1 = f(c - h * xgk[i]);
        const double f2 = f(c + h * xgk[i]);
        kron += wgk[i] * (f1 + f2);
        if (i % 2 == 1) gauss += wg[i / 2] * (f1 + f2);
    }
    kron *= h;
    gauss *= h;
    const double err = std::abs(kron - gauss);
    if (err <= rel_tol * std::abs(kron) || depth >= 48) return kron;
    return gk15(f, a, c, rel_tol, depth + 1) + gk15(f, c, b, rel_tol, depth + 1);
}

inline double sinhc(double x) {
    return std::abs(x) < 1e-8 ? 1.0 + x * x / 6.0 : std::sinh(x) / x;
}

struct Rk4State {
    double y, v;
};

inline Rk4State rk4_step(const Rk4State& s, double h) {
    auto f = [](const Rk4State& q) {
        return Rk4State{q.v, -4.0 * std::sinh(q.y)};
    };
    const Rk4State k1 = f(s);
    const Rk4State k2 = f({s.y + 0.5 * h * k1.y, s.v + 0.5 * h * k1.v});
    const Rk4State k3 = f({s.y + 0.5 * h * k2.y, s.v + 0.5 * h * k2.v});
    const Rk4State k4 = f({s.y + h * k3.y, s.v + h * k3.v});
    return {s.y + h / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
            s.v + h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v)};
}

}  // namespace detail

// Orbit period by quadrature: T(E) = 2 * int du / sqrt(2E - 8 cosh u) over
// one traverse of the well, written in a cancellation-free form.
inline double period_by_quadrature(double energy, double rel_tol = 1e-12) {
    if (energy <= 4.0)
        throw std::invalid_argument("period_by_quadrature: requires E > 4");
    const double a = std::acosh(energy / 4.0);
    // u = a sin(phi); 2E - 8 cosh u = 16 sinh(s+) sinh(s-) with
    // s+- = a(1 +- sin phi)/2 = a sin^2(pi/4 +- phi/2). Using
    // cos(phi) = 2 sin(pi/4 - phi/2) sin(pi/4 + phi/2), both endpoint zeros
    // cancel exactly and the integrand is smooth:
    //   a cos(phi) / (4 sqrt(sinh s+ sinh s-)) = 1/(2 sqrt(sinhc s+ sinhc s-)).
    auto integrand = [a](double phi) {
        const double wm = M_PI / 4.0 - 0.5 * phi;
        const double wp = M_PI / 4.0 + 0.5 * phi;
        const double sm = a * std::sin(wm) * std::sin(wm);
        const double sp = a * std::sin(wp) * std::sin(wp);
        return 0.5 / std::sqrt(detail::sinhc(sm) * detail::sinhc(sp));
    };
    return 2.0 * detail::gk15(integrand, -M_PI / 2.0, M_PI / 2.0, rel_tol);
}

struct OneDSolution {
    double period = 0.0;
    std::vector<double> profile;  // u at j*period/n, u(0) = max
    double energy = 0.0;
    double energy_drift = 0.0;    // max |E(t) - E| over the integration
    double return_time = 0.0;     // ODE-side period, cross-check for T
};

// Closed orbit of u'' = -4 sinh u with energy E > 4, sampled uniformly over
// one period starting at the maximum. RK4 with ~4e4 steps per period keeps
// the energy drift near roundoff.
inline OneDSolution solve_1d(double energy, int samples) {
    if (energy <= 4.0)
        throw std::invalid_argument("solve_1d: requires E > 4 (no oscillation)");
    if (samples < 2) throw std::invalid_argument("solve_1d: samples must be >= 2");
    const double a = std::acosh(energy / 4.0);

    // period upper bound: T(E) decreases from pi as E grows past 4
    const double h = M_PI / 40000.0;
    detail::Rk4State s{a, 0.0};
    double t = 0.0;
    int crossings = 0;
    double t_return = 0.0;
    double drift = 0.0;
    const double e0 = 0.5 * s.v * s.v + 4.0 * std::cosh(s.y);
    for (int step = 0; step < 400000 && crossings < 2; ++step) {
        const detail::Rk4State next = detail::rk4_step(s, h);
        const double e = 0.5 * next.v * next.v + 4.0 * std::cosh(next.y);
        drift = std::max(drift, std::abs(e - e0));
        if (step > 0 && s.v < 0.0 != (next.v < 0.0)) {
            // bisect the crossing of v inside [t, t+h]
            double lo = 0.0, hi = h;
            detail::Rk4State base = s;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const detail::Rk4State m = detail::rk4_step(base, mid);
                if ((m.v < 0.0) == (s.v < 0.0))
                    lo = mid;
                else
                    hi = mid;
            }
            ++crossings;
            if (crossings == 2) t_return = t + 0.5 * (lo + hi);
        }
        s = next;
        t += h;
    }
    if (crossings < 2)
        throw std::runtime_error("solve_1d: failed to detect orbit return");

    OneDSolution out;
    out.energy = energy;
    out.energy_drift = drift;
    out.return_time = t_return;
    out.period = period_by_quadrature(energy);

    // resample the orbit at j*T/n with fixed substeps per interval
    const int substeps = std::max(1, 40000 / samples);
    const double hs = out.period / (static_cast<double>(samples) * substeps);
    out.profile.resize(samples);
    detail::Rk4State q{a, 0.0};
    for (int j = 0; j < samples; ++j) {
        out.profile[j] = q.y;
        for (int i = 0; i < substeps; ++i) q = detail::rk4_step(q, hs);
    }
    return out;
}

// Lays the 1-D profile onto a torus with x-period equal to the orbit period.
inline ScalarField field_from_profile(const OneDSolution& oned, double ly,
                                      int ny, int m = 1) {
    const int nx = static_cast<int>(oned.profile.size());
    Grid g(TorusLattice(complexd(oned.period * m, 0.0), complexd(0.0, ly), m),
           nx * m, ny);
    std::vector<double> v(g.size());
    for (int k = 0; k < g.ny; ++k)
        for (int j = 0; j < g.nx; ++j)
            v[g.index(j, k)] = oned.profile[j % nx];
    return ScalarField(g, std::move(v));
}

// --- continuation off the trivial branch ---------------------------------

struct BifurcationPoint {
    double t = 0.0;
    int p = 0, q = 0;  // critical integer mode
};

// Scans a lattice family for parameters where the linearization at u == 0,
// (1/4)Delta0 + 1, is singular: some dual mode with |xi|^2 = 4.
inline std::optional<BifurcationPoint> find_bifurcation(
    const std::function<TorusLattice(double)>& family, int scan_samples = 400,
    int mode_window = 6) {
    auto crit = [&](const TorusLattice& lat, int p, int q) {
        double xix, xiy;
        lat.wavevector(p, q, xix, xiy);
        return 1.0 - 0.25 * (xix * xix + xiy * xiy);
    };
    std::optional<BifurcationPoint> best;
    for (int p = -mode_window; p <= mode_window; ++p)
        for (int q = -mode_window; q <= mode_window; ++q) {
            if (p == 0 && q == 0) continue;
            double prev_t = 0.0;
            double prev_f = crit(family(0.0), p, q);
            for (int s = 0; s <= scan_samples; ++s) {
                const double t = static_cast<double>(s) / scan_samples;
                const double f = crit(family(t), p, q);
                double hit_t = -1.0;
                if (std::abs(f) < 1e-12) {
                    hit_t = t;
                } else if (s > 0 && (prev_f < 0.0) != (f < 0.0)) {
                    double lo = prev_t, hi = t, flo = prev_f;
                    for (int it = 0; it < 100; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        const double fm = crit(family(mid), p, q);
                        if ((fm < 0.0) == (flo < 0.0)) {
                            lo = mid;
                            flo = fm;
                        } else {
                            hi = mid;
                        }
                    }
                    hit_t = 0.5 * (lo + hi);
                }
                if (hit_t >= 0.0 && (!best || hit_t < best->t)) {
                    best = BifurcationPoint{hit_t, p, q};
                }
                prev_t = t;
                prev_f = f;
            }
        }
    return best;
}

struct ContinuationPoint {
    double t = 0.0;
    SinhGordonSolution solution;
};

struct StepFailure : std::runtime_error {
    std::vector<ContinuationPoint> accepted;
    StepFailure(const std::string& msg, std::vector<ContinuationPoint> acc)
        : std::runtime_error(msg), accepted(std::move(acc)) {}
};

namespace detail {

inline ScalarField residual_at(const std::vector<double>& u,
                               const TorusLattice& lat, int nx, int ny) {
    return sinh_gordon_residual(ScalarField(Grid(lat, nx, ny), u));
}

}  // namespace detail

// Pseudo-arclength continuation of nontrivial solutions along a lattice
// family t -> Lambda(t), starting from the first bifurcation of u == 0.
// Even symmetry is enforced to pin the translation phase of the branch.
inline std::vector<ContinuationPoint> continue_branch(
    const std::function<TorusLattice(double)>& family, int nx, int ny,
    const SolveConfig& cfg) {
    auto bif = find_bifurcation(family);
    if (!bif)
        throw NoBifurcationDetected(
            "continue_branch: no dual mode with |xi|^2 = 4 in the family");

    std::vector<ContinuationPoint> accepted;
    SolveConfig local = cfg;
    local.symmetry = SolveConfig::Symmetry::even;

    auto make_seed = [&](double t, double amp) {
        Grid g(family(t), nx, ny);
        std::vector<double> v(g.size());
        for (int k = 0; k < g.ny; ++k)
            for (int j = 0; j < g.nx; ++j)
                v[g.index(j, k)] =
                    amp * std::cos(2.0 * M_PI *
                                   (bif->p * static_cast<double>(j) / nx +
                                    bif->q * static_cast<double>(k) / ny));
        return ScalarField(g, std::move(v));
    };

    // first point: planted just off the bifurcation on either side
    double t0 = -1.0;
    for (double dt : {-local.continuation_initial_step,
                      local.continuation_initial_step,
                      -2.0 * local.continuation_initial_step,
                      2.0 * local.continuation_initial_step}) {
        const double t = bif->t + dt;
        if (t < 0.0 || t > 1.0) continue;
        try {
            auto sol = solve(make_seed(t, local.continuation_seed_amplitude),
                             local, "continuation");
            if (sol.u.max_abs() >= local.collapse_threshold) {
                accepted.push_back({t, std::move(sol)});
                t0 = t;
                break;
            }
        } catch (const NonConvergence&) {
        } catch (const DivergedToTrivial&) {
        }
    }
    if (accepted.empty())
        throw StepFailure("continue_branch: no nontrivial start point", {});

    // secant tangent from the trivial state at the bifurcation
    std::vector<double> prev_u(accepted.back().solution.u.values.size(), 0.0);
    double prev_t = bif->t;

    const size_t n = accepted.back().solution.u.values.size();
    const double wnorm = 1.0 / std::sqrt(static_cast<double>(n));
    double ds = local.continuation_initial_step;

    while (static_cast<int>(accepted.size()) < local.continuation_steps) {
        const auto& cur = accepted.back();
        std::vector<double> tau_u(n);
        for (size_t i = 0; i < n; ++i)
            tau_u[i] = cur.solution.u.values[i] - prev_u[i];
        double tau_t = cur.t - prev_t;
        double tn = std::sqrt(detail::dot(tau_u, tau_u) * wnorm * wnorm +
                              tau_t * tau_t);
        for (auto& x : tau_u) x /= tn;
        tau_t /= tn;

        bool step_done = false;
        for (int attempt = 0; attempt < 6 && !step_done; ++attempt) {
            std::vector<double> u = cur.solution.u.values;
            double t = cur.t;
            for (size_t i = 0; i < n; ++i) u[i] += ds * tau_u[i];
            t += ds * tau_t;
            const std::vector<double> u_pred = u;
            const double t_pred = t;

            bool converged = false;
            for (int it = 0; it < 12; ++it) {
                if (t < -0.5 || t > 1.5) break;
                Grid g(family(t), nx, ny);
                ScalarField res = detail::residual_at(u, family(t), nx, ny);
                double arc = 0.0;
                for (size_t i = 0; i < n; ++i)
                    arc += (u[i] - u_pred[i]) * tau_u[i] * wnorm * wnorm;
                arc += (t - t_pred) * tau_t;
                if (res.max_abs() <= local.newton_tol &&
                    std::abs(arc) <= 1e-10) {
                    converged = true;
                    break;
                }
                std::vector<double> cosh_u(n);
                for (size_t i = 0; i < n; ++i) cosh_u[i] = std::cosh(u[i]);
                detail::NewtonOperator op(g, cosh_u);
                // dF/dt by central difference in the lattice parameter
                const double hT = 1e-6;
                ScalarField rp = detail::residual_at(u, family(t + hT), nx, ny);
                ScalarField rm = detail::residual_at(u, family(t - hT), nx, ny);
                std::vector<double> Ft(n);
                for (size_t i = 0; i < n; ++i)
                    Ft[i] = (rp.values[i] - rm.values[i]) / (2.0 * hT);

                std::vector<double> rhs0(n), rhs1(n);
                for (size_t i = 0; i < n; ++i) {
                    rhs0[i] = -res.values[i];
                    rhs1[i] = -Ft[i];
                }
                const double forcing =
                    std::clamp(res.max_abs(), 1e-12, 1e-2);
                auto d0 = detail::minres(op, rhs0, forcing,
                                         local.minres_max_iters);
                auto d1 = detail::minres(op, rhs1, forcing,
                                         local.minres_max_iters);
                double num = -arc, den = tau_t;
                for (size_t i = 0; i < n; ++i) {
                    num -= tau_u[i] * d0[i] * wnorm * wnorm;
                    den += tau_u[i] * d1[i] * wnorm * wnorm;
                }
                const double dt = std::abs(den) > 1e-14 ? num / den : 0.0;
                for (size_t i = 0; i < n; ++i) u[i] += d0[i] + dt * d1[i];
                t += dt;
                u = detail::reflect_even(Grid(family(t), nx, ny), u);
            }

            if (converged) {
                ScalarField res = detail::residual_at(u, family(t), nx, ny);
                SinhGordonSolution sol;
                sol.u = ScalarField(Grid(family(t), nx, ny), u);
                sol.residual_norm = res.max_abs();
                sol.branch_tag = "continuation";
                prev_u = cur.solution.u.values;
                prev_t = cur.t;
                accepted.push_back({t, std::move(sol)});
                step_done = true;
                if (ds < local.continuation_initial_step) ds *= 1.5;
            } else {
                ds *= 0.5;
                if (ds < 1e-5)
                    throw StepFailure("continue_branch: step size underflow",
                                      accepted);
            }
        }
        if (!step_done)
            throw StepFailure("continue_branch: corrector kept failing",
                              accepted);
    }
    return accepted;
}

// --- file round trip ------------------------------------------------------

// Residuals are recomputed on load; the file's word is never trusted.
inline SinhGordonSolution load_field(const std::string& path) {
    SinhGordonSolution out;
    out.u = load_cmcf(path);
    out.residual_norm = sinh_gordon_residual(out.u).max_abs();
    out.branch_tag = "file";
    return out;
}

inline void save_field(const SinhGordonSolution& sol, const std::string& path) {
    save_cmcf(sol.u, path);
}

}  // namespace cmcindex
