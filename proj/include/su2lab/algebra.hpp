#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

/// su(2) coefficient algebra and its complexification.
///
/// Elements are stored as coefficient triples in a fixed orthonormal basis
/// (sigma_1, sigma_2, sigma_3) whose commutators close with a factor of -2:
///
///   [sigma_1, sigma_2] = -2 sigma_3   (and cyclic).
///
/// The inner product makes the basis orthonormal and is extended complex
/// *bilinearly* (not sesquilinearly) to the complexification.  The star
/// operation conjugates coefficients; it is the involution whose fixed
/// points are the real elements, and the squared pointwise norm of a
/// complex element eta is inner(eta, star(eta)) = sum |c_k|^2.
namespace su2lab {

using complexd = std::complex<double>;

/// Thrown by eigen_split when the supplied axis is not unit length.
struct NonUnitSigma : std::runtime_error {
    explicit NonUnitSigma(double norm)
        : std::runtime_error("eigen_split: axis has norm " + std::to_string(norm) +
                             ", expected 1 within 1e-9") {}
};

/// Real su(2) element: c1*sigma_1 + c2*sigma_2 + c3*sigma_3.
struct LieElement {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

/// Complexified element: coefficients in C against the same basis.
struct CLieElement {
    complexd c1{};
    complexd c2{};
    complexd c3{};

    CLieElement() = default;
    CLieElement(complexd a, complexd b, complexd c) : c1(a), c2(b), c3(c) {}
    CLieElement(const LieElement& r) : c1(r.c1), c2(r.c2), c3(r.c3) {}
};

// ---- arithmetic -----------------------------------------------------------

inline LieElement operator+(const LieElement& a, const LieElement& b) {
    return {a.c1 + b.c1, a.c2 + b.c2, a.c3 + b.c3};
}
inline LieElement operator-(const LieElement& a, const LieElement& b) {
    return {a.c1 - b.c1, a.c2 - b.c2, a.c3 - b.c3};
}
inline LieElement operator-(const LieElement& a) { return {-a.c1, -a.c2, -a.c3}; }
inline LieElement operator*(double s, const LieElement& a) {
    return {s * a.c1, s * a.c2, s * a.c3};
}
inline LieElement operator*(const LieElement& a, double s) { return s * a; }
inline LieElement& operator+=(LieElement& a, const LieElement& b) { a = a + b; return a; }
inline LieElement& operator-=(LieElement& a, const LieElement& b) { a = a - b; return a; }

inline CLieElement operator+(const CLieElement& a, const CLieElement& b) {
    return {a.c1 + b.c1, a.c2 + b.c2, a.c3 + b.c3};
}
inline CLieElement operator-(const CLieElement& a, const CLieElement& b) {
    return {a.c1 - b.c1, a.c2 - b.c2, a.c3 - b.c3};
}
inline CLieElement operator-(const CLieElement& a) { return {-a.c1, -a.c2, -a.c3}; }
inline CLieElement operator*(complexd s, const CLieElement& a) {
    return {s * a.c1, s * a.c2, s * a.c3};
}
inline CLieElement operator*(const CLieElement& a, complexd s) { return s * a; }
inline CLieElement operator*(double s, const CLieElement& a) { return complexd(s) * a; }
inline CLieElement& operator+=(CLieElement& a, const CLieElement& b) { a = a + b; return a; }
inline CLieElement& operator-=(CLieElement& a, const CLieElement& b) { a = a - b; return a; }

// ---- bracket, inner product, star -----------------------------------------

/// [a, b] = -2 (a x b) in coefficients; reproduces [sigma_1,sigma_2] = -2 sigma_3.
inline LieElement bracket(const LieElement& a, const LieElement& b) {
    return {-2.0 * (a.c2 * b.c3 - a.c3 * b.c2),
            -2.0 * (a.c3 * b.c1 - a.c1 * b.c3),
            -2.0 * (a.c1 * b.c2 - a.c2 * b.c1)};
}

/// Complex-bilinear extension of the bracket.
inline CLieElement bracket(const CLieElement& a, const CLieElement& b) {
    return {-2.0 * (a.c2 * b.c3 - a.c3 * b.c2),
            -2.0 * (a.c3 * b.c1 - a.c1 * b.c3),
            -2.0 * (a.c1 * b.c2 - a.c2 * b.c1)};
}

/// Orthonormal-basis inner product (real case).
inline double inner(const LieElement& a, const LieElement& b) {
    return a.c1 * b.c1 + a.c2 * b.c2 + a.c3 * b.c3;
}

/// Complex-bilinear inner product: sum_k a_k b_k (no conjugation).
inline complexd inner(const CLieElement& a, const CLieElement& b) {
    return a.c1 * b.c1 + a.c2 * b.c2 + a.c3 * b.c3;
}

/// Star involution: identity on real elements.
inline LieElement star(const LieElement& a) { return a; }

/// Star involution: conjugates coefficients, so star(sigma_1 - i sigma_2)
/// = sigma_1 + i sigma_2 and star is conjugate-linear.
inline CLieElement star(const CLieElement& a) {
    return {std::conj(a.c1), std::conj(a.c2), std::conj(a.c3)};
}

inline double norm_sq(const LieElement& a) { return inner(a, a); }
inline double norm(const LieElement& a) { return std::sqrt(norm_sq(a)); }

/// |eta|^2 = sum |c_k|^2 = inner(eta, star(eta)).
inline double norm_sq(const CLieElement& a) {
    return std::norm(a.c1) + std::norm(a.c2) + std::norm(a.c3);
}
inline double norm(const CLieElement& a) { return std::sqrt(norm_sq(a)); }

/// Coefficient-wise real part as a real element.
inline LieElement real_part(const CLieElement& a) {
    return {a.c1.real(), a.c2.real(), a.c3.real()};
}
/// Coefficient-wise imaginary part as a real element.
inline LieElement imag_part(const CLieElement& a) {
    return {a.c1.imag(), a.c2.imag(), a.c3.imag()};
}

inline bool is_finite(const LieElement& a) {
    return std::isfinite(a.c1) && std::isfinite(a.c2) && std::isfinite(a.c3);
}
inline bool is_finite(const CLieElement& a) {
    return std::isfinite(a.c1.real()) && std::isfinite(a.c1.imag()) &&
           std::isfinite(a.c2.real()) && std::isfinite(a.c2.imag()) &&
           std::isfinite(a.c3.real()) && std::isfinite(a.c3.imag());
}

// ---- eigenbundle split along a unit axis -----------------------------------

/// Result of splitting a complex element along the unit axis sigma:
/// eta = p0 + p_plus + p_minus, where p0 lies along sigma and p_plus/p_minus
/// are the +1/-1 eigenvectors of eta -> [i sigma / 2, eta].
struct EigenSplit {
    CLieElement p0;
    CLieElement p_plus;
    CLieElement p_minus;
};

namespace detail {
constexpr double kUnitAxisTolerance = 1e-9;
}

/// Action of the operator T = [i sigma / 2, . ] on a complex element.
inline CLieElement axis_action(const LieElement& sigma, const CLieElement& eta) {
    const CLieElement csigma(complexd(0.0, 0.5) * CLieElement(sigma));
    return bracket(csigma, eta);
}

/// Split eta into the kernel / +1 / -1 eigenspaces of [i sigma/2, . ].
///
/// On the orthogonal complement of sigma the operator squares to the
/// identity, so the projectors are (1 +/- T)/2 applied after removing the
/// component along sigma.  Requires |sigma| = 1 within 1e-9.
inline EigenSplit eigen_split(const LieElement& sigma, const CLieElement& eta) {
    const double n = norm(sigma);
    if (std::abs(n - 1.0) > detail::kUnitAxisTolerance) throw NonUnitSigma(n);
    EigenSplit out;
    const complexd along = inner(CLieElement(sigma), eta);
    out.p0 = along * CLieElement(sigma);
    const CLieElement rest = eta - out.p0;
    const CLieElement t_rest = axis_action(sigma, rest);
    out.p_plus = 0.5 * (rest + t_rest);
    out.p_minus = 0.5 * (rest - t_rest);
    return out;
}

/// Convenience basis constants.
inline LieElement sigma1() { return {1.0, 0.0, 0.0}; }
inline LieElement sigma2() { return {0.0, 1.0, 0.0}; }
inline LieElement sigma3() { return {0.0, 0.0, 1.0}; }

/// The plus-mode generator sigma_1 - i sigma_2 attached to the sigma_3 axis.
inline CLieElement plus_generator() { return {complexd(1.0, 0.0), complexd(0.0, -1.0), complexd(0.0, 0.0)}; }

}  // namespace su2lab
