// Exact differential-polynomial algebra and the R_j / K_j matrix recursion
// that generates the Jacobi fields v_j of the sinh-Gordon hierarchy.
//
// All coefficients are Gaussian rationals (exact complex rationals), so the
// structural facts the recursion must satisfy -- off-diagonal right-hand
// sides, K_j being a sigma_1 multiple for even j, the weight grading -- are
// checked exactly, not to a tolerance.
#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cmcindex/lattice.hpp"

namespace cmcindex {

using Rational = boost::multiprecision::cpp_rational;

struct RecursionInconsistency : std::logic_error {
    using std::logic_error::logic_error;
};

struct GaussianRational {
    Rational re{0};
    Rational im{0};

    GaussianRational() = default;
    GaussianRational(long r) : re(r) {}
    GaussianRational(Rational r) : re(std::move(r)) {}
    GaussianRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

    static GaussianRational imaginary_unit() { return {Rational(0), Rational(1)}; }

    bool is_zero() const { return re == 0 && im == 0; }

    GaussianRational operator-() const { return {-re, -im}; }
    GaussianRational operator+(const GaussianRational& o) const {
        return {re + o.re, im + o.im};
    }
    GaussianRational operator-(const GaussianRational& o) const {
        return {re - o.re, im - o.im};
    }
    GaussianRational operator*(const GaussianRational& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
    GaussianRational operator/(const GaussianRational& o) const {
        const Rational d = o.re * o.re + o.im * o.im;
        if (d == 0) throw std::domain_error("GaussianRational: divide by zero");
        return {(re * o.re + im * o.im) / d, (im * o.re - re * o.im) / d};
    }
    bool operator==(const GaussianRational& o) const {
        return re == o.re && im == o.im;
    }

    complexd to_complex() const {
        return complexd(re.convert_to<double>(), im.convert_to<double>());
    }
};

// coeff * prod_k Dz^(k) u over the sorted multiset of derivative orders.
// An empty multiset is a constant term.
struct DiffMonomial {
    GaussianRational coeff;
    std::vector<int> factors;  // ascending, each >= 1

    int weight() const {
        int w = 0;
        for (int k : factors) w += k;
        return w;
    }
};

namespace detail {
// Canonical term order: factor multisets sorted descending, compared
// lexicographically. Reproduces the order the closed forms are usually
// written in: (Dz^1 u)^5 before (Dz^1 u)(Dz^2 u)^2 before Dz^5 u.
inline std::vector<int> descending(const std::vector<int>& f) {
    std::vector<int> d(f.rbegin(), f.rend());
    return d;
}
inline bool factor_less(const std::vector<int>& a, const std::vector<int>& b) {
    return descending(a) < descending(b);
}
}  // namespace detail

// Canonical sum of monomials with pairwise distinct factor multisets.
class DiffPoly {
public:
    DiffPoly() = default;

    static DiffPoly zero() { return DiffPoly(); }
    static DiffPoly constant(GaussianRational c) {
        return monomial(std::move(c), {});
    }
    static DiffPoly monomial(GaussianRational c, std::vector<int> factors) {
        DiffPoly p;
        if (!c.is_zero()) {
            std::sort(factors.begin(), factors.end());
            for (int k : factors)
                if (k < 1)
                    throw std::invalid_argument(
                        "DiffMonomial: derivative orders must be >= 1");
            p.terms_.push_back({std::move(c), std::move(factors)});
        }
        return p;
    }

    const std::vector<DiffMonomial>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    DiffPoly operator-() const {
        DiffPoly r = *this;
        for (auto& t : r.terms_) t.coeff = -t.coeff;
        return r;
    }
    DiffPoly operator+(const DiffPoly& o) const {
        DiffPoly r;
        auto a = terms_.begin(), b = o.terms_.begin();
        while (a != terms_.end() || b != o.terms_.end()) {
            if (b == o.terms_.end() ||
                (a != terms_.end() && detail::factor_less(a->factors, b->factors))) {
                r.terms_.push_back(*a++);
            } else if (a == terms_.end() ||
                       detail::factor_less(b->factors, a->factors)) {
                r.terms_.push_back(*b++);
            } else {
                GaussianRational c = a->coeff + b->coeff;
                if (!c.is_zero()) r.terms_.push_back({std::move(c), a->factors});
                ++a;
                ++b;
            }
        }
        return r;
    }
    DiffPoly operator-(const DiffPoly& o) const { return *this + (-o); }
    DiffPoly operator*(const DiffPoly& o) const {
        DiffPoly r;
        for (const auto& ta : terms_)
            for (const auto& tb : o.terms_) {
                std::vector<int> f = ta.factors;
                f.insert(f.end(), tb.factors.begin(), tb.factors.end());
                r = r + monomial(ta.coeff * tb.coeff, std::move(f));
            }
        return r;
    }
    DiffPoly scaled(const GaussianRational& c) const {
        if (c.is_zero()) return zero();
        DiffPoly r = *this;
        for (auto& t : r.terms_) t.coeff = t.coeff * c;
        return r;
    }

    // d/dz by the Leibniz rule: raises one derivative order per factor.
    DiffPoly dz() const {
        DiffPoly r;
        for (const auto& t : terms_)
            for (size_t i = 0; i < t.factors.size(); ++i) {
                std::vector<int> f = t.factors;
                f[i] += 1;
                r = r + monomial(t.coeff, std::move(f));
            }
        return r;
    }

    bool operator==(const DiffPoly& o) const {
        if (terms_.size() != o.terms_.size()) return false;
        for (size_t i = 0; i < terms_.size(); ++i)
            if (!(terms_[i].coeff == o.terms_[i].coeff) ||
                terms_[i].factors != o.terms_[i].factors)
                return false;
        return true;
    }

private:
    std::vector<DiffMonomial> terms_;  // sorted by detail::factor_less
};

struct MatPoly {
    DiffPoly a11, a12, a21, a22;

    static MatPoly zero() { return {}; }

    bool off_diagonal() const { return a11.is_zero() && a22.is_zero(); }

    MatPoly operator+(const MatPoly& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    MatPoly operator-(const MatPoly& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    MatPoly operator*(const MatPoly& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    MatPoly scaled(const GaussianRational& c) const {
        return {a11.scaled(c), a12.scaled(c), a21.scaled(c), a22.scaled(c)};
    }
    MatPoly left_mul(const DiffPoly& p) const {
        return {p * a11, p * a12, p * a21, p * a22};
    }
    MatPoly dz() const { return {a11.dz(), a12.dz(), a21.dz(), a22.dz()}; }
    MatPoly commutator(const MatPoly& o) const { return *this * o - o * *this; }
};

namespace pauli {
inline MatPoly sigma1() {
    MatPoly s;
    s.a12 = DiffPoly::constant(GaussianRational(1));
    s.a21 = DiffPoly::constant(GaussianRational(1));
    return s;
}
inline MatPoly sigma2() {
    MatPoly s;
    s.a12 = DiffPoly::constant(-GaussianRational::imaginary_unit());
    s.a21 = DiffPoly::constant(GaussianRational::imaginary_unit());
    return s;
}
inline MatPoly sigma3() {
    MatPoly s;
    s.a11 = DiffPoly::constant(GaussianRational(1));
    s.a22 = DiffPoly::constant(GaussianRational(-1));
    return s;
}
}  // namespace pauli

// All R_j, K_j for j <= j_max, plus the scalar rho_j with K_j = rho_j*sigma1
// for even j. Index 0 of R and K is unused.
struct HierarchyTables {
    std::vector<MatPoly> R;
    std::vector<MatPoly> K;
    std::map<int, DiffPoly> rho;
};

inline HierarchyTables recursion(int j_max) {
    if (j_max < 2) throw std::invalid_argument("recursion: j_max must be >= 2");
    const GaussianRational i = GaussianRational::imaginary_unit();
    const GaussianRational half(Rational(1, 2));
    const DiffPoly uz = DiffPoly::monomial(GaussianRational(1), {1});
    const DiffPoly uzz = DiffPoly::monomial(GaussianRational(1), {2});
    const MatPoly s1 = pauli::sigma1(), s2 = pauli::sigma2(), s3 = pauli::sigma3();

    HierarchyTables t;
    t.R.resize(static_cast<size_t>(j_max) + 1);
    t.K.resize(static_cast<size_t>(j_max) + 1);

    t.R[1] = s2.left_mul(uz.scaled(-half));
    if (j_max >= 2) t.R[2] = s1.left_mul(uzz.scaled(half));

    // i[R_{k+1}, sigma3] = -u_z sum_{n=1}^{k-1} R_n sigma1 R_{k-n} - 2 dz R_k
    // For off-diagonal M, i[M,sigma3] = (-2i M12, +2i M21).
    for (int k = 2; k + 1 <= j_max; ++k) {
        MatPoly acc = MatPoly::zero();
        for (int n = 1; n <= k - 1; ++n)
            acc = acc + t.R[n] * s1 * t.R[k - n];
        MatPoly rhs = acc.left_mul(-uz) - t.R[k].dz().scaled(GaussianRational(2));
        if (!rhs.off_diagonal())
            throw RecursionInconsistency(
                "recursion: R right-hand side has a diagonal entry at k=" +
                std::to_string(k));
        MatPoly next;
        next.a12 = rhs.a12.scaled(GaussianRational(1) / (GaussianRational(-2) * i));
        next.a21 = rhs.a21.scaled(GaussianRational(1) / (GaussianRational(2) * i));
        t.R[k + 1] = next;
    }

    t.K[1] = s3.scaled(-i);
    if (j_max >= 2) t.K[2] = s1.left_mul(-uz);
    for (int j = 2; j + 1 <= j_max; ++j) {
        MatPoly sum = MatPoly::zero();
        for (int l = 2; l <= j; ++l) sum = sum + t.K[l] * t.R[j + 1 - l];
        t.K[j + 1] = t.R[j].commutator(s3).scaled(-i) - sum;
    }

    for (int j = 2; j <= j_max; j += 2) {
        const MatPoly& Kj = t.K[j];
        if (!Kj.off_diagonal() || !(Kj.a12 == Kj.a21))
            throw RecursionInconsistency(
                "recursion: K_j is not a sigma1 multiple at even j=" +
                std::to_string(j));
        t.rho[j] = Kj.a12;
    }
    return t;
}

// Substitutes spectral derivatives of u into a differential polynomial.
inline ComplexField evaluate(const DiffPoly& poly, const ScalarField& u,
                             SpectralOptions opts = {}) {
    std::map<int, ComplexField> dcache;
    auto deriv = [&](int k) -> const ComplexField& {
        auto it = dcache.find(k);
        if (it == dcache.end())
            it = dcache.emplace(k, dz(u, k, opts)).first;
        return it->second;
    };
    std::vector<complexd> acc(u.grid.size(), complexd(0.0, 0.0));
    for (const auto& term : poly.terms()) {
        const complexd c = term.coeff.to_complex();
        std::vector<const ComplexField*> fs;
        fs.reserve(term.factors.size());
        for (int k : term.factors) fs.push_back(&deriv(k));
        for (size_t idx = 0; idx < acc.size(); ++idx) {
            complexd v = c;
            for (const auto* f : fs) v *= f->values[idx];
            acc[idx] += v;
        }
    }
    return ComplexField(u.grid, std::move(acc));
}

// Hierarchy facade: recursion tables up to j_max plus Jacobi-field
// evaluation, v_j = Re rho_{j+1} (j odd), Im rho_j (j even).
class Hierarchy {
public:
    explicit Hierarchy(int j_max = 12) : j_max_(j_max), tables_(recursion(j_max)) {}

    int j_max() const { return j_max_; }
    const HierarchyTables& tables() const { return tables_; }

    const DiffPoly& rho(int even_j) const {
        auto it = tables_.rho.find(even_j);
        if (it == tables_.rho.end())
            throw std::out_of_range("Hierarchy: rho_" + std::to_string(even_j) +
                                    " not computed (j_max=" +
                                    std::to_string(j_max_) + ")");
        return it->second;
    }

    ScalarField jacobi_field(int j, const ScalarField& u,
                             SpectralOptions opts = {}) const {
        if (j < 1) throw std::invalid_argument("jacobi_field: j must be >= 1");
        const int even = (j % 2 == 1) ? j + 1 : j;
        const ComplexField val = evaluate(rho(even), u, opts);
        return (j % 2 == 1) ? val.real() : val.imag();
    }

private:
    int j_max_;
    HierarchyTables tables_;
};

// --- canonical text form ------------------------------------------------

namespace detail {
inline std::string rational_str(const Rational& r) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(r);
    if (boost::multiprecision::denominator(r) != 1)
        os << "/" << boost::multiprecision::denominator(r);
    return os.str();
}

// "1" and "-1" keep their sign only; used by the term printer.
inline std::string coeff_str(const GaussianRational& c) {
    if (c.im == 0) return rational_str(c.re);
    if (c.re == 0) {
        if (c.im == 1) return "i";
        if (c.im == -1) return "-i";
        return rational_str(c.im) + "*i";
    }
    return "(" + rational_str(c.re) + (c.im > 0 ? "+" : "") +
           rational_str(c.im) + "*i)";
}
}  // namespace detail

// Stable text form, e.g. "-1/2*(Dz^1 u)^3 + (Dz^3 u)".
inline std::string to_text(const DiffPoly& poly) {
    if (poly.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& term : poly.terms()) {
        std::string c = detail::coeff_str(term.coeff);
        bool negative = !c.empty() && c[0] == '-';
        std::string mag = negative ? c.substr(1) : c;

        std::string factors;
        for (size_t i = 0; i < term.factors.size();) {
            size_t jrun = i;
            while (jrun < term.factors.size() &&
                   term.factors[jrun] == term.factors[i])
                ++jrun;
            if (!factors.empty()) factors += "*";
            factors += "(Dz^" + std::to_string(term.factors[i]) + " u)";
            if (jrun - i > 1) factors += "^" + std::to_string(jrun - i);
            i = jrun;
        }

        std::string body;
        if (factors.empty())
            body = mag;
        else if (mag == "1")
            body = factors;
        else
            body = mag + "*" + factors;

        if (first) {
            out += (negative ? "-" : "") + body;
            first = false;
        } else {
            out += (negative ? " - " : " + ") + body;
        }
    }
    return out;
}

}  // namespace cmcindex
