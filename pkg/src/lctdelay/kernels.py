"""Oscillation-perturbed Erlang memory kernels.

A kernel of order ``k`` and decay rate ``sigma`` is

    alpha(t) = theta_k(t) * [a + sum_n (eps_n cos(omega_n t) + mu_n sin(omega_n t))]

with the Erlang density ``theta_k(t) = sigma^k t^(k-1) exp(-sigma t) / (k-1)!``.
Besides point evaluation the module provides L1 norms by truncated adaptive
Simpson quadrature and closed-form tail transforms used by the history
integrals and the direct integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Oscillation",
    "KernelSpec",
    "eval_erlang",
    "eval_kernel",
    "erlang_tail",
    "truncation_point",
    "adaptive_simpson",
    "l1_norm",
    "kernel_difference_norm",
    "erlang_tail_transform",
    "kernel_tail_transform",
]


@dataclass(frozen=True)
class Oscillation:
    """One sinusoidal perturbation ``eps*cos(omega t) + mu*sin(omega t)``."""

    eps: float
    mu: float
    omega: float

    def to_dict(self) -> dict:
        return {"eps": self.eps, "mu": self.mu, "omega": self.omega}


@dataclass(frozen=True)
class KernelSpec:
    order: int
    sigma: float
    a: float = 1.0
    oscillations: tuple[Oscillation, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if isinstance(self.order, bool) or int(self.order) != self.order or self.order < 1:
            raise ValueError(f"kernel order must be a positive integer, got {self.order!r}")
        object.__setattr__(self, "order", int(self.order))
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"kernel sigma must be positive and finite, got {self.sigma!r}")
        oscs = []
        for osc in self.oscillations:
            if not isinstance(osc, Oscillation):
                osc = Oscillation(*osc)
            if not all(math.isfinite(v) for v in (osc.eps, osc.mu, osc.omega)):
                raise ValueError(f"non-finite oscillation parameters {osc!r}")
            oscs.append(osc)
        object.__setattr__(self, "oscillations", tuple(oscs))
        if not math.isfinite(self.a):
            raise ValueError(f"kernel base weight must be finite, got {self.a!r}")

    @property
    def n_osc(self) -> int:
        return len(self.oscillations)

    @property
    def amplitude_bound(self) -> float:
        """Upper bound of ``|alpha(t)| / theta_k(t)``."""
        return abs(self.a) + sum(abs(o.eps) + abs(o.mu) for o in self.oscillations)

    @property
    def max_frequency(self) -> float:
        return max((abs(o.omega) for o in self.oscillations), default=0.0)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "sigma": self.sigma,
            "a": self.a,
            "oscillations": [o.to_dict() for o in self.oscillations],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        try:
            oscs = tuple(
                Oscillation(float(o.get("eps", 0.0)), float(o.get("mu", 0.0)), float(o["omega"]))
                for o in data.get("oscillations", [])
            )
            return cls(int(data["order"]), float(data["sigma"]), float(data.get("a", 1.0)), oscs)
        except KeyError as exc:
            raise ValueError(f"kernel spec missing field {exc.args[0]!r}") from None


def _erlang(order: int, sigma: float, t):
    t = np.asarray(t, dtype=float)
    if order == 1:
        return sigma * np.exp(-sigma * t)
    with np.errstate(divide="ignore"):
        log_val = (
            order * math.log(sigma)
            + (order - 1) * np.log(t)
            - sigma * t
            - math.lgamma(order)
        )
    return np.where(t > 0, np.exp(log_val), 0.0)


def eval_erlang(spec: KernelSpec, t):
    """Erlang envelope ``theta_k(t)``; accepts scalars or arrays with ``t >= 0``."""
    out = _erlang(spec.order, spec.sigma, t)
    return float(out) if out.ndim == 0 else out


def eval_kernel(spec: KernelSpec, t):
    """Full kernel ``alpha(t)``; ``t`` may be a scalar or an array."""
    t = np.asarray(t, dtype=float)
    bracket = spec.a
    for osc in spec.oscillations:
        bracket = bracket + (osc.eps * np.cos(osc.omega * t) + osc.mu * np.sin(osc.omega * t))
    out = _erlang(spec.order, spec.sigma, t) * bracket
    return float(out) if out.ndim == 0 else out


def erlang_tail(order: int, sigma: float, T: float) -> float:
    """``int_T^inf theta_k``, the regularized upper incomplete gamma Q(k, sigma*T)."""
    x = sigma * T
    term = 1.0
    total = 1.0
    for j in range(1, order):
        term *= x / j
        total += term
    return math.exp(-x) * total


def truncation_point(specs: KernelSpec | Sequence[KernelSpec], tail_tol: float) -> float:
    """Smallest ``T`` (to 1e-9 relative) with the summed envelope tail bound below ``tail_tol``."""
    if not tail_tol > 0:
        raise ValueError(f"tail_tol must be positive, got {tail_tol!r}")
    if isinstance(specs, KernelSpec):
        specs = [specs]
    specs = [s for s in specs if s.amplitude_bound > 0]
    if not specs:
        return 0.0

    def bound(T):
        return sum(s.amplitude_bound * erlang_tail(s.order, s.sigma, T) for s in specs)

    if bound(0.0) < tail_tol:
        return 0.0
    hi = max(s.order / s.sigma for s in specs)
    while bound(hi) >= tail_tol:
        hi *= 2.0
    lo = 0.0
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if bound(mid) < tail_tol:
            hi = mid
        else:
            lo = mid
    return hi


def adaptive_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float,
    initial_panels: int = 16,
    max_levels: int = 60,
) -> float:
    """Adaptive Simpson quadrature with interval halving.

    ``f`` must be vectorized. All panels of one refinement level are evaluated
    in a single call. Each panel carries its share of ``tol``; a split halves it.
    Converged panels contribute their Richardson-corrected value.
    """
    if b <= a:
        return 0.0
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = f(lo), f(mid), f(hi)
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    ptol = np.full(lo.shape, tol / initial_panels)
    min_width = 1e-15 * (b - a)
    total = 0.0
    for _ in range(max_levels):
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        err = left + right - whole
        done = (np.abs(err) <= 15.0 * ptol) | ((hi - lo) < min_width)
        total += float(np.sum((left + right + err / 15.0)[done]))
        keep = ~done
        if not keep.any():
            return total
        lo, lm, mid, rm, hi = lo[keep], lm[keep], mid[keep], rm[keep], hi[keep]
        flo, flm, fmid, frm, fhi = flo[keep], flm[keep], fmid[keep], frm[keep], fhi[keep]
        left, right, half_tol = left[keep], right[keep], 0.5 * ptol[keep]
        lo, mid, hi = np.concatenate([lo, mid]), np.concatenate([lm, rm]), np.concatenate([mid, hi])
        flo, fmid, fhi = np.concatenate([flo, fmid]), np.concatenate([flm, frm]), np.concatenate([fmid, fhi])
        whole = np.concatenate([left, right])
        ptol = np.concatenate([half_tol, half_tol])
    # level budget exhausted: accept what is left
    return total + float(np.sum(whole))


def _panel_count(specs: Iterable[KernelSpec], T: float) -> int:
    rate = max(max(s.sigma, s.max_frequency) for s in specs)
    return int(min(4096, max(16, math.ceil(T * rate))))


def l1_norm(spec: KernelSpec, tail_tol: float = 1e-10) -> float:
    """``int_0^inf |alpha(t)| dt`` with truncation error below ``tail_tol``."""
    T = truncation_point(spec, tail_tol)
    if T == 0.0:
        return 0.0
    return adaptive_simpson(
        lambda t: np.abs(eval_kernel(spec, t)), 0.0, T, tail_tol / 10.0, _panel_count([spec], T)
    )


def kernel_difference_norm(spec1: KernelSpec, spec2: KernelSpec, tail_tol: float = 1e-10) -> float:
    """``int_0^inf |alpha2(t) - alpha1(t)| dt``; exactly 0.0 for equal specs."""
    if not tail_tol > 0:
        raise ValueError(f"tail_tol must be positive, got {tail_tol!r}")
    if spec1 == spec2:
        return 0.0
    T = truncation_point([spec1, spec2], tail_tol)
    if T == 0.0:
        return 0.0
    return adaptive_simpson(
        lambda t: np.abs(eval_kernel(spec2, t) - eval_kernel(spec1, t)),
        0.0,
        T,
        tail_tol / 10.0,
        _panel_count([spec1, spec2], T),
    )


def erlang_tail_transform(order: int, sigma: float, p, t=0.0):
    """``int_t^inf theta_k(tau) exp(-p tau) dtau`` for complex ``p`` with Re(sigma+p) > 0.

    Closed form: ``(sigma/s)^k exp(-s t) sum_{j<k} (s t)^j / j!`` with ``s = sigma + p``.
    """
    s = sigma + np.asarray(p, dtype=complex)
    if np.any(s.real <= 0):
        raise ValueError("transform diverges: Re(sigma + p) must be positive")
    t = np.asarray(t, dtype=float)
    st = s * t
    term = np.ones_like(st)
    total = np.ones_like(st)
    for j in range(1, order):
        term = term * st / j
        total = total + term
    return (sigma / s) ** order * np.exp(-st) * total


def kernel_tail_transform(spec: KernelSpec, t=0.0, p: float = 0.0):
    """``int_t^inf alpha(tau) exp(-p tau) dtau`` (real, closed form) for real ``p > -sigma``."""
    k, sig = spec.order, spec.sigma
    out = spec.a * erlang_tail_transform(k, sig, p, t).real
    for osc in spec.oscillations:
        out = out + ((osc.eps - 1j * osc.mu) * erlang_tail_transform(k, sig, p - 1j * osc.omega, t)).real
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out
