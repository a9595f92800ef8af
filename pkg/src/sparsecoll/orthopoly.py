"""Orthonormal Hermite and Jacobi polynomials.

Hermite polynomials are normalized against the standard Gaussian measure,
``int H_j H_k dgamma = delta_jk``; Jacobi polynomials against the Jacobi
probability measure ``c_ab (1-y)^a (1+y)^b dy`` on [-1, 1].
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

__all__ = [
    "ConvergenceError",
    "gaussian_density",
    "hermite_value",
    "hermite_table",
    "hermite_derivative",
    "hermite_roots",
    "gauss_hermite_rule",
    "mrs_number",
    "effective_support",
    "jacobi_norm_constant",
    "jacobi_density_constant",
    "jacobi_value",
    "jacobi_table",
    "jacobi_roots",
    "gauss_jacobi_rule",
]


class ConvergenceError(ArithmeticError):
    """A root finder or maximizer did not reach its residual tolerance."""


def gaussian_density(y):
    """Standard normal density g(y)."""
    y = np.asarray(y, dtype=float)
    return np.exp(-0.5 * y * y) / math.sqrt(2.0 * math.pi)


def hermite_value(k: int, y):
    """Orthonormal probabilists' Hermite polynomial H_k = He_k / sqrt(k!).

    Uses the normalized three-term recurrence so k! is never formed.
    """
    if k < 0:
        raise ValueError("degree must be nonnegative")
    y = np.asarray(y, dtype=float)
    h_prev = np.zeros_like(y)
    h = np.ones_like(y)
    for j in range(k):
        h_prev, h = h, (y * h - math.sqrt(j) * h_prev) / math.sqrt(j + 1)
    return h if h.ndim else float(h)


def hermite_table(kmax: int, y) -> np.ndarray:
    """Rows H_0..H_kmax evaluated at the points y; shape (kmax+1, len(y))."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.empty((kmax + 1, y.size))
    out[0] = 1.0
    if kmax >= 1:
        out[1] = y
    for j in range(1, kmax):
        out[j + 1] = (y * out[j] - math.sqrt(j) * out[j - 1]) / math.sqrt(j + 1)
    return out


def hermite_derivative(k: int, y):
    """H_k'(y) = sqrt(k) H_{k-1}(y)."""
    if k == 0:
        return np.zeros_like(np.asarray(y, dtype=float))
    return math.sqrt(k) * hermite_value(k - 1, y)


def _weighted(k: int, y):
    return hermite_value(k, y) * np.sqrt(gaussian_density(y))


def _symmetrize(x: np.ndarray) -> np.ndarray:
    # exact mirror symmetry, exact zero at the center for odd counts
    x = 0.5 * (x - x[::-1])
    n = x.size
    if n % 2 == 1:
        x[n // 2] = 0.0
    return x


def _hermite_jacobi_matrix(n: int):
    return np.zeros(n), np.sqrt(np.arange(1.0, n))


def hermite_roots(m: int) -> np.ndarray:
    """The m+1 roots of H_{m+1}, strictly increasing and mirror symmetric.

    Eigenvalues of the Jacobi matrix, one Newton step on H_{m+1}, then exact
    symmetrization. The residual is checked in the sqrt(g)-weighted scale,
    since unweighted H_{m+1} grows like exp(y^2/4) near the outer roots.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    n = m + 1
    if n == 1:
        return np.zeros(1)
    diag, off = _hermite_jacobi_matrix(n)
    x = eigh_tridiagonal(diag, off, eigvals_only=True)
    x = x - hermite_value(n, x) / hermite_derivative(n, x)
    x = _symmetrize(np.sort(x))
    resid = np.max(np.abs(_weighted(n, x)))
    if not resid <= 1e-10:
        raise ConvergenceError(f"H_{n} root residual {resid:.3e} exceeds 1e-10")
    return x


def gauss_hermite_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss rule for the standard Gaussian measure (weights sum to 1)."""
    if n < 1:
        raise ValueError("n must be positive")
    x = hermite_roots(n - 1)
    # closed form is stable in the normalized basis
    w = 1.0 / (n * hermite_value(n - 1, x) ** 2)
    w = 0.5 * (w + w[::-1])
    return x, w / w.sum()


def mrs_number(m: int) -> float:
    """Mhaskar-Rakhmanov-Saff number a_m(sqrt(g)) = sqrt(m)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return math.sqrt(m)


def effective_support(m: int) -> float:
    """Radius 2*sqrt(m) beyond which degree-m polynomials times sqrt(g) decay.

    This is the root of the MRS equation for Q(y) = y^2/4, the exponent of
    sqrt(g); node windows and maximizer scans are sized with it.
    """
    return 2.0 * math.sqrt(max(m, 0))


# --- Jacobi ---------------------------------------------------------------


def _check_ab(a: float, b: float) -> None:
    if not (a > -1.0 and b > -1.0):
        raise ValueError(f"Jacobi parameters must exceed -1, got a={a}, b={b}")


def jacobi_density_constant(a: float, b: float) -> float:
    """c_ab making c_ab (1-y)^a (1+y)^b a probability density on [-1, 1]."""
    _check_ab(a, b)
    return math.exp(
        gammaln(a + b + 2) - (a + b + 1) * math.log(2.0) - gammaln(a + 1) - gammaln(b + 1)
    )


def jacobi_norm_constant(k: int, a: float, b: float) -> float:
    """c_k^{a,b}: factor turning the classical P_k^{(a,b)} into an orthonormal J_k."""
    _check_ab(a, b)
    if k == 0:
        return 1.0
    log_c2 = (
        math.log(2 * k + a + b + 1)
        + gammaln(k + 1)
        + gammaln(k + a + b + 1)
        + gammaln(a + 1)
        + gammaln(b + 1)
        - gammaln(k + a + 1)
        - gammaln(k + b + 1)
        - gammaln(a + b + 2)
    )
    return math.exp(0.5 * log_c2)


def _classical_jacobi(k: int, y: np.ndarray, a: float, b: float) -> np.ndarray:
    p_prev = np.ones_like(y)
    if k == 0:
        return p_prev
    p = (a + 1.0) + 0.5 * (a + b + 2.0) * (y - 1.0)
    for n in range(2, k + 1):
        c = 2 * n + a + b
        lead = 2.0 * n * (n + a + b) * (c - 2)
        p_prev, p = p, (
            (c - 1) * (c * (c - 2) * y + a * a - b * b) * p
            - 2.0 * (n + a - 1) * (n + b - 1) * c * p_prev
        ) / lead
    return p


def jacobi_value(k: int, y, a: float, b: float):
    """Orthonormal Jacobi polynomial J_k(y) for the (a, b) probability measure."""
    _check_ab(a, b)
    if k < 0:
        raise ValueError("degree must be nonnegative")
    y_arr = np.asarray(y, dtype=float)
    out = jacobi_norm_constant(k, a, b) * _classical_jacobi(k, y_arr, a, b)
    return out if out.ndim else float(out)


def jacobi_table(kmax: int, y, a: float, b: float) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return np.stack([jacobi_value(k, y, a, b) for k in range(kmax + 1)])


def _jacobi_recurrence(n: int, a: float, b: float):
    """Monic recurrence coefficients (alpha_0..alpha_{n-1}, sqrt(beta_1..beta_{n-1}))."""
    k = np.arange(n, dtype=float)
    c = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = (b * b - a * a) / (c * (c + 2))
    alpha[0] = (b - a) / (a + b + 2)
    if n == 1:
        return alpha, np.zeros(0)
    k = np.arange(1, n, dtype=float)
    c = 2 * k + a + b
    beta = 4 * k * (k + a) * (k + b) * (k + a + b) / (c * c * (c + 1) * (c - 1))
    beta[0] = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
    return alpha, np.sqrt(beta)


def gauss_jacobi_rule(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss rule for the Jacobi probability measure (weights sum to 1)."""
    _check_ab(a, b)
    if n < 1:
        raise ValueError("n must be positive")
    alpha, off = _jacobi_recurrence(n, a, b)
    if n == 1:
        return alpha.copy(), np.ones(1)
    x, vecs = eigh_tridiagonal(alpha, off)
    w = vecs[0] ** 2
    if a == b:
        x = _symmetrize(x)
        w = 0.5 * (w + w[::-1])
    return x, w / w.sum()


def jacobi_roots(n: int, a: float, b: float) -> np.ndarray:
    """Roots of J_n for the (a, b) measure, strictly increasing."""
    return gauss_jacobi_rule(n, a, b)[0]
