// Torus lattices, sampling grids, periodic fields and spectral calculus.
//
// A field lives on the quotient of the plane by the lattice spanned by
// omega1, omega2. Grid nodes are z = (j/nx)*omega1 + (k/ny)*omega2 and are
// stored row-major with k (omega2 direction) as the slow index. All
// differentiation is spectral: a field is expanded in plane waves
// exp(2*pi*i*(p*s + q*t)) over logical coordinates (s,t) in [0,1)^2, and the
// physical wavevector of mode (p,q) follows from the Jacobian of
// (s,t) -> s*omega1 + t*omega2.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmcindex/fft.hpp"

namespace cmcindex {

using complexd = std::complex<double>;

// Signals that a field carries too much energy near the grid's Nyquist band
// for the requested spectral operation to be trustworthy.
struct AliasingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SpectralOptions {
    // Maximum fraction of spectral energy allowed in the top third of the
    // mode square before dz/laplacian refuse to differentiate.
    double alias_threshold = 1e-10;
};

// The surface torus C/Lambda together with the index-m refinement along
// omega1 that carries the double periodicity of u: tilde_omega1 = omega1/m,
// tilde_omega2 = omega2. m = 1 collapses the two lattices.
struct TorusLattice {
    complexd omega1;
    complexd omega2;
    int m = 1;

    TorusLattice() : omega1(1.0, 0.0), omega2(0.0, 1.0) {}
    TorusLattice(complexd w1, complexd w2, int mult = 1)
        : omega1(w1), omega2(w2), m(mult) {
        if (m < 1) throw std::invalid_argument("TorusLattice: m must be >= 1");
        if (std::abs(det()) <= 1e-14 * std::abs(w1) * std::abs(w2))
            throw std::invalid_argument(
                "TorusLattice: generators linearly dependent over R");
    }

    // Signed area of the fundamental domain of Lambda.
    double det() const {
        return omega1.real() * omega2.imag() - omega2.real() * omega1.imag();
    }
    double area() const { return std::abs(det()); }

    complexd tilde_omega1() const { return omega1 / static_cast<double>(m); }
    complexd tilde_omega2() const { return omega2; }

    complexd point(double s, double t) const { return s * omega1 + t * omega2; }

    // Logical coordinates (s,t) of a point z, i.e. the inverse of point().
    void logical(complexd z, double& s, double& t) const {
        const double d = det();
        s = (z.real() * omega2.imag() - z.imag() * omega2.real()) / d;
        t = (-z.real() * omega1.imag() + z.imag() * omega1.real()) / d;
    }

    // Physical wavevector xi of integer mode (p,q):
    // exp(i*(xi_x*x + xi_y*y)) == exp(2*pi*i*(p*s + q*t)).
    void wavevector(double p, double q, double& xix, double& xiy) const {
        const double f = 2.0 * M_PI / det();
        xix = f * (omega2.imag() * p - omega1.imag() * q);
        xiy = f * (-omega2.real() * p + omega1.real() * q);
    }

    bool operator==(const TorusLattice& o) const {
        return omega1 == o.omega1 && omega2 == o.omega2 && m == o.m;
    }
};

// The four points of C/tilde_Lambda whose doubles lie in tilde_Lambda,
// reduced to the fundamental domain of tilde_Lambda.
inline std::array<complexd, 4> half_periods(const TorusLattice& lat) {
    const complexd w1 = lat.tilde_omega1();
    const complexd w2 = lat.tilde_omega2();
    auto reduce = [&](complexd z) {
        TorusLattice tilde(w1, w2);
        double s, t;
        tilde.logical(z, s, t);
        s -= std::floor(s);
        t -= std::floor(t);
        if (s > 1.0 - 1e-12) s = 0.0;
        if (t > 1.0 - 1e-12) t = 0.0;
        return s * w1 + t * w2;
    };
    return {complexd(0.0, 0.0), reduce(0.5 * w1), reduce(0.5 * w2),
            reduce(0.5 * (w1 + w2))};
}

struct Grid {
    TorusLattice lattice;
    int nx = 0;
    int ny = 0;

    Grid() = default;
    Grid(TorusLattice lat, int nx_, int ny_) : lattice(lat), nx(nx_), ny(ny_) {
        if (nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0)
            throw std::invalid_argument("Grid: nx, ny must be positive even");
    }

    size_t size() const { return static_cast<size_t>(nx) * ny; }
    size_t index(int j, int k) const {
        return static_cast<size_t>(((k % ny) + ny) % ny) * nx +
               static_cast<size_t>(((j % nx) + nx) % nx);
    }
    complexd node(int j, int k) const {
        return lattice.point(static_cast<double>(j) / nx,
                             static_cast<double>(k) / ny);
    }
    double cell_area() const { return lattice.area() / size(); }

    // Signed mode index: p in [0,nx) -> p or p-nx with |.| <= nx/2.
    static int signed_mode(int p, int n) { return p <= n / 2 ? p : p - n; }

    bool operator==(const Grid& o) const {
        return lattice == o.lattice && nx == o.nx && ny == o.ny;
    }
};

namespace detail {
inline void check_finite(const double* data, size_t n, const char* what) {
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(data[i]))
            throw std::invalid_argument(std::string(what) +
                                        ": non-finite value");
}
inline void check_finite(const complexd* data, size_t n, const char* what) {
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(data[i].real()) || !std::isfinite(data[i].imag()))
            throw std::invalid_argument(std::string(what) +
                                        ": non-finite value");
}
}  // namespace detail

// Real doubly periodic grid function, one value per node of one fundamental
// domain. Immutable by convention: operations return fresh fields.
struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw std::invalid_argument("ScalarField: size mismatch");
        detail::check_finite(values.data(), values.size(), "ScalarField");
    }
    ScalarField(Grid g, double fill)
        : grid(g), values(g.size(), fill) {
        detail::check_finite(values.data(), values.size(), "ScalarField");
    }

    double& at(int j, int k) { return values[grid.index(j, k)]; }
    double at(int j, int k) const { return values[grid.index(j, k)]; }

    double max_abs() const {
        double r = 0.0;
        for (double v : values) r = std::max(r, std::abs(v));
        return r;
    }
};

struct ComplexField {
    Grid grid;
    std::vector<complexd> values;

    ComplexField() = default;
    ComplexField(Grid g, std::vector<complexd> v)
        : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw std::invalid_argument("ComplexField: size mismatch");
        detail::check_finite(values.data(), values.size(), "ComplexField");
    }

    ScalarField real() const {
        std::vector<double> r(values.size());
        for (size_t i = 0; i < r.size(); ++i) r[i] = values[i].real();
        return ScalarField(grid, std::move(r));
    }
    ScalarField imag() const {
        std::vector<double> r(values.size());
        for (size_t i = 0; i < r.size(); ++i) r[i] = values[i].imag();
        return ScalarField(grid, std::move(r));
    }
    double max_abs() const {
        double r = 0.0;
        for (auto v : values) r = std::max(r, std::abs(v));
        return r;
    }
};

inline ScalarField make_field(const Grid& g,
                              const std::function<double(double, double)>& f) {
    std::vector<double> v(g.size());
    for (int k = 0; k < g.ny; ++k)
        for (int j = 0; j < g.nx; ++j) {
            const complexd z = g.node(j, k);
            v[g.index(j, k)] = f(z.real(), z.imag());
        }
    return ScalarField(g, std::move(v));
}

namespace detail {

inline std::vector<complexd> to_complex(const ScalarField& f) {
    std::vector<complexd> c(f.values.size());
    for (size_t i = 0; i < c.size(); ++i) c[i] = f.values[i];
    return c;
}

// Unnormalized forward spectrum; chat[q*nx+p] multiplies
// exp(2*pi*i*(p*s+q*t)) / (nx*ny) in the inversion formula.
inline std::vector<complexd> spectrum(const ScalarField& f) {
    auto c = to_complex(f);
    fft2_forward(c, f.grid.nx, f.grid.ny);
    return c;
}
inline std::vector<complexd> spectrum(const ComplexField& f) {
    auto c = f.values;
    fft2_forward(c, f.grid.nx, f.grid.ny);
    return c;
}

// Fraction of spectral energy in the top third of the mode square:
// modes with max(|p|/(nx/2), |q|/(ny/2)) > 2/3.
inline double top_third_energy_fraction(const std::vector<complexd>& chat,
                                        int nx, int ny) {
    double total = 0.0, top = 0.0;
    for (int k = 0; k < ny; ++k) {
        const int q = Grid::signed_mode(k, ny);
        const double qf = std::abs(static_cast<double>(q)) / (ny / 2);
        for (int j = 0; j < nx; ++j) {
            const int p = Grid::signed_mode(j, nx);
            const double pf = std::abs(static_cast<double>(p)) / (nx / 2);
            const double e = std::norm(chat[static_cast<size_t>(k) * nx + j]);
            total += e;
            if (std::max(pf, qf) > 2.0 / 3.0 + 1e-12) top += e;
        }
    }
    return total > 0.0 ? top / total : 0.0;
}

inline void require_resolved(const std::vector<complexd>& chat, int nx, int ny,
                             const SpectralOptions& opts, const char* op) {
    const double frac = top_third_energy_fraction(chat, nx, ny);
    if (frac > opts.alias_threshold)
        throw AliasingError(std::string(op) +
                            ": top-third spectral energy fraction " +
                            std::to_string(frac) + " exceeds threshold " +
                            std::to_string(opts.alias_threshold) +
                            " (field under-resolved)");
}

template <typename FieldT>
std::vector<complexd> multiplier_transform(
    const FieldT& f, const SpectralOptions& opts, const char* op,
    const std::function<complexd(double, double)>& mult) {
    auto chat = spectrum(f);
    const int nx = f.grid.nx, ny = f.grid.ny;
    require_resolved(chat, nx, ny, opts, op);
    for (int k = 0; k < ny; ++k) {
        const int q = Grid::signed_mode(k, ny);
        for (int j = 0; j < nx; ++j) {
            const int p = Grid::signed_mode(j, nx);
            double xix, xiy;
            f.grid.lattice.wavevector(p, q, xix, xiy);
            chat[static_cast<size_t>(k) * nx + j] *= mult(xix, xiy);
        }
    }
    fft2_inverse(chat, nx, ny);
    return chat;
}

}  // namespace detail

// k-th spectral d/dz derivative, d/dz = (d/dx - i d/dy)/2.
template <typename FieldT>
ComplexField dz(const FieldT& f, int order, SpectralOptions opts = {}) {
    if (order < 1) throw std::invalid_argument("dz: order must be >= 1");
    auto vals = detail::multiplier_transform(
        f, opts, "dz", [order](double xix, double xiy) {
            const complexd m(0.5 * xiy, 0.5 * xix);  // (i*xix + xiy)/2
            complexd r(1.0, 0.0);
            for (int i = 0; i < order; ++i) r *= m;
            return r;
        });
    return ComplexField(f.grid, std::move(vals));
}

// Geometer's Euclidean Laplacian -(d_xx + d_yy); positive on plane waves.
inline ScalarField laplacian_eucl(const ScalarField& f,
                                  SpectralOptions opts = {}) {
    auto vals = detail::multiplier_transform(
        f, opts, "laplacian_eucl", [](double xix, double xiy) {
            return complexd(xix * xix + xiy * xiy, 0.0);
        });
    std::vector<double> r(vals.size());
    for (size_t i = 0; i < r.size(); ++i) r[i] = vals[i].real();
    return ScalarField(f.grid, std::move(r));
}

// Trapezoid rule, spectrally exact for periodic integrands.
inline double integrate(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.grid.cell_area();
}

inline double inner_dxdy(const ScalarField& a, const ScalarField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("inner: grid mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s * a.grid.cell_area();
}

inline double l2_norm(const ScalarField& f) {
    return std::sqrt(inner_dxdy(f, f));
}

// Zero-padded (or truncated) spectral resampling onto an nx2 x ny2 grid of
// the same lattice. Source Nyquist rows are dropped; fields passing the
// aliasing guard lose nothing measurable.
inline ScalarField resample(const ScalarField& f, int nx2, int ny2) {
    Grid g2(f.grid.lattice, nx2, ny2);
    auto chat = detail::spectrum(f);
    const int nx = f.grid.nx, ny = f.grid.ny;
    std::vector<complexd> out(g2.size(), complexd(0.0, 0.0));
    for (int k = 0; k < ny; ++k) {
        const int q = Grid::signed_mode(k, ny);
        if (std::abs(q) >= ny / 2 || std::abs(q) >= ny2 / 2) continue;
        for (int j = 0; j < nx; ++j) {
            const int p = Grid::signed_mode(j, nx);
            if (std::abs(p) >= nx / 2 || std::abs(p) >= nx2 / 2) continue;
            const int j2 = (p + nx2) % nx2;
            const int k2 = (q + ny2) % ny2;
            out[static_cast<size_t>(k2) * nx2 + j2] =
                chat[static_cast<size_t>(k) * nx + j];
        }
    }
    detail::fft2_inverse(out, nx2, ny2);
    // rescale: inverse normalized by 1/(nx2*ny2) but coefficients came from
    // an nx*ny transform
    const double scale = (static_cast<double>(nx2) * ny2) /
                         (static_cast<double>(nx) * ny);
    std::vector<double> r(out.size());
    for (size_t i = 0; i < r.size(); ++i) r[i] = out[i].real() * scale;
    return ScalarField(g2, std::move(r));
}

// Trigonometric interpolation of a real field and its first derivatives at
// arbitrary points; precomputes the spectrum once.
class FieldInterpolant {
public:
    explicit FieldInterpolant(const ScalarField& f)
        : grid_(f.grid), chat_(detail::spectrum(f)) {}

    double value(complexd z) const { return sum(z, 0, 0); }
    double dx(complexd z) const { return sum(z, 1, 0); }
    double dy(complexd z) const { return sum(z, 0, 1); }

private:
    double sum(complexd z, int dx_order, int dy_order) const {
        double s, t;
        grid_.lattice.logical(z, s, t);
        const int nx = grid_.nx, ny = grid_.ny;
        complexd acc(0.0, 0.0);
        for (int k = 0; k < ny; ++k) {
            const int q = Grid::signed_mode(k, ny);
            for (int j = 0; j < nx; ++j) {
                const int p = Grid::signed_mode(j, nx);
                double xix, xiy;
                grid_.lattice.wavevector(p, q, xix, xiy);
                complexd m(1.0, 0.0);
                if (dx_order) m *= complexd(0.0, xix);
                if (dy_order) m *= complexd(0.0, xiy);
                const double phase = 2.0 * M_PI * (p * s + q * t);
                acc += chat_[static_cast<size_t>(k) * nx + j] * m *
                       complexd(std::cos(phase), std::sin(phase));
            }
        }
        return acc.real() / (static_cast<double>(nx) * ny);
    }

    Grid grid_;
    std::vector<complexd> chat_;
};

}  // namespace cmcindex
