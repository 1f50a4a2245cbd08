"""Equilibria of the augmented system.

If ``x_e`` solves ``F(x_e, g * J x_e) = 0`` with the effective gain ``g`` below,
the full equilibrium follows without further solving: every ``V_k`` equals
``J x_e`` and every complex chain value ``u + i v`` equals ``delta * J x_e``
where ``delta = (sigma / (sigma - i omega))^k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .lct import DelaySystemSpec, vector_field
from .logistic import LogisticParams, logistic_rhs

__all__ = [
    "DeltaSequence",
    "EquilibriumPoint",
    "ConvergenceError",
    "SingularJacobianError",
    "EquilibriumAtInfinity",
    "delta",
    "delta_sequence",
    "effective_gain",
    "assemble_state",
    "find_equilibrium",
    "logistic_equilibrium",
]


class ConvergenceError(RuntimeError):
    pass


class SingularJacobianError(RuntimeError):
    pass


class EquilibriumAtInfinity(ZeroDivisionError):
    pass


def delta(k: int, sigma: float, omega: float) -> complex:
    return complex((sigma / complex(sigma, -omega)) ** k)


@dataclass(frozen=True)
class DeltaSequence:
    """``delta[(k, n)]`` for every oscillation block."""

    values: Mapping[tuple[int, int], complex]

    def __getitem__(self, key: tuple[int, int]) -> complex:
        return self.values[key]

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def max_modulus(self) -> float:
        return max((abs(v) for v in self.values.values()), default=0.0)


def delta_sequence(sigma: float, omegas: Sequence[Sequence[float]]) -> DeltaSequence:
    """``omegas[k-1][n-1]`` is the frequency of block ``(k, n)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    vals = {}
    for k, row in enumerate(omegas, start=1):
        for n, w in enumerate(row, start=1):
            vals[(k, n)] = delta(k, sigma, w)
    return DeltaSequence(vals)


def _spec_deltas(spec: DelaySystemSpec) -> DeltaSequence:
    return delta_sequence(spec.sigma, [[o.omega for o in ker.oscillations] for ker in spec.kernels])


def effective_gain(spec: DelaySystemSpec) -> float:
    """``g = sum_k c_k [a_k + sum_n (eps Re delta + mu Im delta)]``."""
    deltas = _spec_deltas(spec)
    g = 0.0
    for k, (c, ker) in enumerate(zip(spec.weights, spec.kernels), start=1):
        inner = ker.a
        for n, osc in enumerate(ker.oscillations, start=1):
            dl = deltas[(k, n)]
            inner += osc.eps * dl.real + osc.mu * dl.imag
        g += c * inner
    return g


@dataclass(frozen=True)
class EquilibriumPoint:
    x_e: np.ndarray
    V: dict = field(repr=False)
    u: dict = field(repr=False)
    v: dict = field(repr=False)
    residual: float
    state: np.ndarray = field(repr=False)

    def to_record(self, **keys) -> dict:
        """JSON-ready record; ``keys`` (e.g. sigma, epsilon) are stored alongside."""
        fmt = lambda arr: [float(a) for a in np.atleast_1d(arr)]  # noqa: E731
        return {
            **{k: float(v) for k, v in keys.items()},
            "x_e": fmt(self.x_e),
            "V": {str(k): fmt(v) for k, v in self.V.items()},
            "u": {f"{k},{n}": fmt(v) for (k, n), v in self.u.items()},
            "v": {f"{k},{n}": fmt(v) for (k, n), v in self.v.items()},
            "residual": self.residual,
        }


def assemble_state(spec: DelaySystemSpec, x_e, layout=None) -> np.ndarray:
    """Full augmented equilibrium vector built from ``x_e``."""
    if layout is None:
        layout = vector_field(spec)[0]
    x_e = np.asarray(x_e, dtype=float)
    xd = x_e[: spec.d]
    deltas = _spec_deltas(spec)
    X = np.zeros(layout[-1].stop)
    for b in layout:
        if b.kind == "x":
            X[b.slice] = x_e
        elif b.kind == "V":
            X[b.slice] = xd
        else:
            dl = deltas[(b.k, b.n)]
            X[b.slice] = (dl.real if b.kind == "u" else dl.imag) * xd
    return X


def _point_from_state(layout, X, residual) -> EquilibriumPoint:
    V, u, v = {}, {}, {}
    for b in layout:
        if b.kind == "V":
            V[b.k] = X[b.slice].copy()
        elif b.kind == "u":
            u[(b.k, b.n)] = X[b.slice].copy()
        elif b.kind == "v":
            v[(b.k, b.n)] = X[b.slice].copy()
    return EquilibriumPoint(X[layout[0].slice].copy(), V, u, v, float(residual), X)


def _fd_jacobian(func, x, fx):
    n = x.size
    J = np.empty((fx.size, n))
    h0 = math.sqrt(np.finfo(float).eps)
    for i in range(n):
        h = h0 * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        J[:, i] = (func(xp) - fx) / (xp[i] - x[i])
    return J


def find_equilibrium(
    spec: DelaySystemSpec, x_guess, tol: float = 1e-12, max_iter: int = 100
) -> EquilibriumPoint:
    """Damped Newton on ``F(x, g J x) = 0``, then the chain blocks from the delta sequence."""
    layout, G, _, _ = vector_field(spec)
    g = effective_gain(spec)
    D, d = spec.D, spec.d

    def H(x):
        z = np.zeros(D)
        z[:d] = g * x[:d]
        return np.asarray(spec.rhs(x, z), dtype=float)

    x = np.array(x_guess, dtype=float).reshape(D)
    fx = H(x)
    res = float(np.max(np.abs(fx)))
    for _ in range(max_iter):
        if not math.isfinite(res):
            raise ConvergenceError(f"residual became non-finite at x={x}")
        if res <= tol:
            break
        J = _fd_jacobian(H, x, fx)
        cond = np.linalg.cond(J)
        if not math.isfinite(cond) or cond > 1e14:
            raise SingularJacobianError(f"Newton system is singular (condition estimate {cond:.3g})")
        step = np.linalg.solve(J, -fx)
        lam = 1.0
        for _ in range(31):
            x_new = x + lam * step
            f_new = H(x_new)
            r_new = float(np.max(np.abs(f_new)))
            if r_new < res:
                break
            lam *= 0.5
        else:
            raise ConvergenceError(f"damped Newton stalled with residual {res:.3g}")
        x, fx, res = x_new, f_new, r_new
    else:
        if res > tol:
            raise ConvergenceError(f"no convergence after {max_iter} iterations; last residual {res:.3g}")
    X = assemble_state(spec, x, layout)
    residual = float(np.max(np.abs(G(X))))
    return _point_from_state(layout, X, residual)


def logistic_equilibrium(r: float, K: float, sigma: float, Omega: float = 0.0, epsilon: float = 0.0) -> EquilibriumPoint:
    """Closed-form nontrivial equilibrium of the logistic model.

    ``x_e = (1+theta)^2 K / [(1+theta)^2 - eps (theta - 1)]`` with ``theta = (Omega/sigma)^2``.
    The state vector is in the hand-written order ``[x, V1, V2, u1, v1, u2, v2]``.
    """
    p = LogisticParams(r, K, sigma, Omega, epsilon)
    th = p.theta
    den = p.denominator
    if abs(den) < 1e-12:
        raise EquilibriumAtInfinity(
            f"equilibrium at infinity: (1+theta)^2 - eps (theta-1) = {den:.3g} (theta={th}, epsilon={epsilon})"
        )
    xe = (1.0 + th) ** 2 * K / den
    s = math.sqrt(th)
    u1, v1 = xe / (1.0 + th), s * xe / (1.0 + th)
    u2, v2 = (1.0 - th) * xe / (1.0 + th) ** 2, 2.0 * s * xe / (1.0 + th) ** 2
    X = np.array([xe, xe, xe, u1, v1, u2, v2])
    residual = float(np.max(np.abs(logistic_rhs(p, X))))
    one = lambda val: np.array([val])  # noqa: E731
    return EquilibriumPoint(
        one(xe), {1: one(xe), 2: one(xe)}, {(1, 1): one(u1), (2, 1): one(u2)}, {(1, 1): one(v1), (2, 1): one(v2)},
        residual, X,
    )
