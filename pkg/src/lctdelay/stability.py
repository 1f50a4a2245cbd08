"""Linear stability: characteristic polynomials, Routh-Hurwitz cascades, spectra.

Everything here works on plain numpy arrays. The characteristic polynomial is
``P(z) = z^r + b_1 z^(r-1) + ... + b_r`` and coefficient vectors are stored
without the leading one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Verdict",
    "CharPoly",
    "RouthHurwitzReport",
    "StabilityReport",
    "jacobian",
    "char_poly",
    "hurwitz_matrix",
    "lu_det",
    "determinant_sensitivities",
    "hurwitz_determinants",
    "routh_hurwitz",
    "logistic_mu",
    "scaled_logistic_coefficients",
    "scaling_check",
    "hessenberg",
    "eigenvalues",
    "stability_report",
    "MAX_ORDER",
]

MAX_ORDER = 64
_EPS = np.finfo(float).eps


class Verdict(str, enum.Enum):
    STABLE = "AsymptoticallyStable"
    UNSTABLE = "Unstable"
    CRITICAL = "Critical"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CharPoly:
    """Monic polynomial ``z^r + b_1 z^(r-1) + ... + b_r``."""

    coefficients: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([[1.0], self.coefficients])

    def __call__(self, z):
        out = np.ones_like(np.asarray(z, dtype=complex))
        for b in self.coefficients:
            out = out * z + b
        return out


@dataclass(frozen=True)
class RouthHurwitzReport:
    determinants: np.ndarray
    verdict: Verdict
    first_failure_index: int | None
    tolerance: np.ndarray

    def to_dict(self) -> dict:
        return {
            "determinants": [float(v) for v in self.determinants],
            "verdict": self.verdict.value,
            "first_failure_index": self.first_failure_index,
            "tolerance": [float(t) if np.isfinite(t) else None for t in self.tolerance],
        }


@dataclass(frozen=True)
class StabilityReport:
    charpoly: CharPoly
    routh_hurwitz: RouthHurwitzReport
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def verdict(self) -> Verdict:
        return self.routh_hurwitz.verdict

    def to_dict(self) -> dict:
        return {
            "coefficients": [float(v) for v in self.charpoly.coefficients],
            **self.routh_hurwitz.to_dict(),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
        }


def jacobian(system: Callable, X, step: float | None = None) -> np.ndarray:
    """Central finite-difference Jacobian of ``system(X)``.

    The default step ``eps^(1/3) * max(1, |X_i|)`` balances truncation
    against rounding for central differences.
    """
    X = np.asarray(X, dtype=float)
    f0 = np.asarray(system(X), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise FloatingPointError(f"right-hand side is not finite at {X}")
    n = X.size
    J = np.empty((f0.size, n))
    base = _EPS ** (1.0 / 3.0) if step is None else step
    for i in range(n):
        h = base * max(1.0, abs(X[i]))
        xp, xm = X.copy(), X.copy()
        xp[i] += h
        xm[i] -= h
        h2 = xp[i] - xm[i]
        fp, fm = np.asarray(system(xp), dtype=float), np.asarray(system(xm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise FloatingPointError(f"right-hand side is not finite near {X}")
        J[:, i] = (fp - fm) / h2
    return J


def char_poly(J) -> CharPoly:
    """Faddeev-LeVerrier recurrence for ``det(z I - J)``."""
    A = np.asarray(J, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"square matrix required, got shape {A.shape}")
    if n > MAX_ORDER:
        raise ValueError(f"order {n} exceeds the supported bound {MAX_ORDER}")
    coeffs = np.zeros(n)
    M = np.zeros_like(A)
    c_prev = 1.0
    eye = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + c_prev * eye
        c_prev = -np.trace(A @ M) / k
        coeffs[k - 1] = c_prev
    return CharPoly(coeffs)


def hurwitz_matrix(coeffs) -> np.ndarray:
    """Hurwitz matrix: row i holds ``b_{2j-i}`` (``b_0 = 1``, out-of-range entries zero)."""
    b = np.concatenate([[1.0], np.asarray(coeffs, dtype=float)])
    n = len(b) - 1
    H = np.zeros((n, n))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            idx = 2 * j - i
            if 0 <= idx <= n:
                H[i - 1, j - 1] = b[idx]
    return H


def lu_det(A) -> float:
    """Determinant by Gaussian elimination with partial pivoting."""
    U = np.array(A, dtype=float)
    n = U.shape[0]
    det = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(U[k:, k])))
        if U[p, k] == 0.0:
            return 0.0
        if p != k:
            U[[k, p]] = U[[p, k]]
            det = -det
        det *= U[k, k]
        U[k + 1 :, k:] -= np.outer(U[k + 1 :, k] / U[k, k], U[k, k:])
    return float(det)


def hurwitz_determinants(coeffs) -> np.ndarray:
    """Leading principal minors ``|D_1| .. |D_r|`` of the Hurwitz matrix."""
    H = hurwitz_matrix(coeffs)
    return np.array([lu_det(H[:j, :j]) for j in range(1, H.shape[0] + 1)])


def determinant_sensitivities(coeffs) -> np.ndarray:
    """First-order change of each ``D_j`` under unit relative perturbation of the entries.

    ``S_j = sum_kl |H_kl| |C_kl|`` over the j-th leading minor, with ``C`` its
    cofactor matrix; for a nonsingular minor this is
    ``|D_j| * sum_kl |H_kl| |(H^-1)_lk|``. Exactly singular minors get ``inf``.
    """
    H = hurwitz_matrix(coeffs)
    out = np.empty(H.shape[0])
    for j in range(1, H.shape[0] + 1):
        Hj = H[:j, :j]
        dj = lu_det(Hj)
        try:
            inv = np.linalg.inv(Hj)
        except np.linalg.LinAlgError:
            out[j - 1] = np.inf
            continue
        out[j - 1] = abs(dj) * float(np.sum(np.abs(Hj) * np.abs(inv.T))) if dj != 0.0 else np.inf
    return out


def routh_hurwitz(p: CharPoly | np.ndarray, tol: float = 1e-9) -> RouthHurwitzReport:
    """Classify a monic polynomial by its Hurwitz determinants.

    ``D_j`` counts as zero when a relative perturbation of size ``tol`` in
    the entries of its minor could make it vanish, i.e. ``|D_j| <= tol * S_j``
    with ``S_j`` from :func:`determinant_sensitivities`. The test is invariant
    under rescaling of the roots, which matters because the ``D_j`` can
    differ by many orders of magnitude.
    """
    coeffs = p.coefficients if isinstance(p, CharPoly) else np.asarray(p, dtype=float)
    if not np.all(np.isfinite(coeffs)):
        raise ValueError("polynomial coefficients must be finite")
    dets = hurwitz_determinants(coeffs)
    thr = tol * determinant_sensitivities(coeffs)
    zero = np.abs(dets) <= thr
    if not np.any(zero) and np.all(dets > 0):
        verdict, first = Verdict.STABLE, None
    else:
        first = int(np.argmax(zero | (dets <= 0))) + 1
        verdict = Verdict.UNSTABLE if np.any((dets < 0) & ~zero) else Verdict.CRITICAL
    return RouthHurwitzReport(dets, verdict, first, thr)


def logistic_mu(theta: float, epsilon: float, mu0: float) -> float:
    """``mu = mu0 (1+theta)^2 / [(1+theta)^2 - eps (theta - 1)]``."""
    num = (1.0 + theta) ** 2
    den = num - epsilon * (theta - 1.0)
    if abs(den) <= 1e-12 * max(1.0, num):
        raise ZeroDivisionError(f"mu is singular at theta={theta}, epsilon={epsilon}")
    return mu0 * num / den


def scaled_logistic_coefficients(theta: float, epsilon: float, mu0: float) -> np.ndarray:
    """Scaled logistic coefficients ``b_1 .. b_7`` (so that ``a_j = sigma^j b_j``)."""
    th, e = theta, epsilon
    mu = logistic_mu(theta, epsilon, mu0)
    return np.array(
        [
            6.0,
            2 * th + 15,
            20 + 8 * th + e * mu + mu,
            th**2 + 12 * th + 15 + 4 * e * mu + 4 * mu,
            2 * th**2 + 8 * th + 6 + 2 * mu * th + 6 * mu - e * mu * th + 6 * e * mu,
            th**2 + 2 * th + 1 + 4 * mu * th + 4 * mu - 2 * e * mu * th + 4 * e * mu,
            -mu * (e * (th - 1) - (th + 1) ** 2),
        ]
    )


def scaling_check(sigma: float, b) -> np.ndarray:
    """``a = diag(sigma, sigma^2, ..., sigma^n) b``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    b = np.asarray(b, dtype=float)
    return b * sigma ** np.arange(1, b.size + 1)


def hessenberg(A) -> np.ndarray:
    """Upper Hessenberg form by Householder similarity transforms."""
    H = np.array(A, dtype=float)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1 :, k]
        norm = np.linalg.norm(x)
        if norm == 0.0:
            continue
        alpha = -math.copysign(norm, x[0])
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        H[k + 1 :, k:] -= 2.0 * np.outer(v, v @ H[k + 1 :, k:])
        H[:, k + 1 :] -= 2.0 * np.outer(H[:, k + 1 :] @ v, v)
        H[k + 2 :, k] = 0.0
    return H


def _balance(A: np.ndarray) -> np.ndarray:
    # Parlett-Reinsch balancing with powers of two (exact in floating point)
    A = A.copy()
    n = A.shape[0]
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.sum(np.abs(A[:, i])) - abs(A[i, i])
            r = np.sum(np.abs(A[i, :])) - abs(A[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g, f, s = r / 2.0, 1.0, c + r
            while c < g:
                f *= 2.0
                c *= 4.0
            g = r * 2.0
            while c > g:
                f /= 2.0
                c /= 4.0
            if (c + r) / f < 0.95 * s:
                done = False
                A[i, :] /= f
                A[:, i] *= f
    return A


def eigenvalues(A, max_iter: int = 60) -> np.ndarray:
    """Eigenvalues by Francis double-shift QR on the balanced Hessenberg form.

    Returned sorted by (real part, imaginary part).
    """
    a = hessenberg(_balance(np.asarray(A, dtype=float)))
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = float(np.sum(np.abs(np.triu(a, -1))))
    nn = n - 1
    t = 0.0
    x = y = z = p = q = r = w = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= _EPS * s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn], wi[nn] = x + t, 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1], wi[nn] = -z, z
                nn -= 2
                break
            if its >= max_iter:
                raise np.linalg.LinAlgError("QR iteration did not converge")
            if its in (10, 20):
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                y = x = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p, q, r = p / s, q / s, r / s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= _EPS * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k + 1 != nn else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p, q, r = p / x, q / x, r / x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x, y, z = p / s, q / s, r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k + 1 != nn:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                mmin = nn if nn < k + 3 else k + 3
                for i in range(l, mmin + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k + 1 != nn:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p
    vals = wr + 1j * wi
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def stability_report(J, tol: float = 1e-9) -> StabilityReport:
    """Characteristic polynomial, Hurwitz verdict and spectrum of ``J``."""
    p = char_poly(J)
    return StabilityReport(p, routh_hurwitz(p, tol), eigenvalues(J))
