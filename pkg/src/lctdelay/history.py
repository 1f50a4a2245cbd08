"""Initial (history) functions on (-inf, 0] and their Erlang moments.

Every history exposes ``erlang_moment(order, sigma, omega, t)``::

    int_t^inf theta_k(tau) exp(i omega tau) u(t - tau) dtau

which is the single quantity needed both for the chain initial conditions
(``t = 0``) and for the history part of the delay term in the direct
integrator (``t > 0``). Constant and exponential histories use closed forms;
anything else goes through quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernels import adaptive_simpson, erlang_tail, erlang_tail_transform

__all__ = [
    "HistoryDivergenceError",
    "ConstantHistory",
    "ExponentialHistory",
    "FunctionHistory",
    "HISTORY_REGISTRY",
    "register_history",
    "parse_history",
]


class HistoryDivergenceError(ValueError):
    """The history integrals do not settle when the truncation window grows."""


def _as_vector(value) -> np.ndarray:
    vec = np.atleast_1d(np.asarray(value, dtype=float))
    if vec.ndim != 1 or not np.all(np.isfinite(vec)):
        raise ValueError(f"history value must be a finite vector, got {value!r}")
    return vec


def _shape_moment(scalar, vec):
    # scalar: () or (m,) complex; vec: (D,) -> () x D or (m, D)
    scalar = np.asarray(scalar)
    if scalar.ndim == 0:
        return complex(scalar) * vec
    return scalar[:, None] * vec[None, :]


@dataclass(frozen=True, eq=False)
class ConstantHistory:
    value: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "value", _as_vector(self.value))

    @property
    def dim(self) -> int:
        return self.value.size

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            return self.value.copy()
        return np.broadcast_to(self.value, s.shape + (self.dim,)).copy()

    def erlang_moment(self, order, sigma, omega, t=0.0, tol=1e-10):
        return _shape_moment(erlang_tail_transform(order, sigma, -1j * omega, t), self.value)

    def sup_norm(self, tol=1e-10) -> float:
        return float(np.sum(np.abs(self.value)))

    def to_string(self) -> str:
        return self.label or "constant:" + _fmt_list(self.value)


@dataclass(frozen=True, eq=False)
class ExponentialHistory:
    """``u(s) = value * exp(rate * s)``; moments need ``rate > -sigma``."""

    value: np.ndarray
    rate: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "value", _as_vector(self.value))
        if not math.isfinite(self.rate):
            raise ValueError("exponential history rate must be finite")

    @property
    def dim(self) -> int:
        return self.value.size

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            return self.value * math.exp(self.rate * float(s))
        return np.exp(self.rate * s)[..., None] * self.value

    def erlang_moment(self, order, sigma, omega, t=0.0, tol=1e-10):
        if self.rate <= -sigma:
            raise HistoryDivergenceError(
                f"history growth exp({-self.rate}*|s|) defeats kernel decay sigma={sigma}"
            )
        t = np.asarray(t, dtype=float)
        scalar = np.exp(self.rate * t) * erlang_tail_transform(order, sigma, self.rate - 1j * omega, t)
        return _shape_moment(scalar, self.value)

    def sup_norm(self, tol=1e-10) -> float:
        if self.rate < 0:
            raise HistoryDivergenceError("history is unbounded on (-inf, 0]")
        return float(np.sum(np.abs(self.value)))

    def to_string(self) -> str:
        return self.label or f"exp:{self.rate!r}:" + _fmt_list(self.value)


@dataclass(frozen=True, eq=False)
class FunctionHistory:
    """Arbitrary vectorized callable ``func(s) -> (..., dim)``."""

    func: Callable
    dim: int
    label: str = "expr:custom"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.asarray(self.func(s), dtype=float)
        if s.ndim == 0:
            return out.reshape(self.dim)
        return out.reshape(s.shape + (self.dim,))

    def _moment_at(self, order, sigma, omega, t, tol):
        # int_0^inf theta_k(t + w) e^{i omega (t + w)} u(-w) dw, componentwise
        from .kernels import _erlang

        def integrand(w, comp, part):
            vals = _erlang(order, sigma, t + w) * self(-w)[:, comp]
            phase = omega * (t + w)
            return vals * (np.cos(phase) if part == 0 else np.sin(phase))

        T = _initial_window(order, sigma, t, tol)
        out = np.zeros(self.dim, dtype=complex)
        for comp in range(self.dim):
            for part in (0, 1):
                if part == 1 and omega == 0.0:
                    continue
                val = adaptive_simpson(lambda w: integrand(w, comp, part), 0.0, T, tol / 10.0, 64)
                lo = T
                for _ in range(20):
                    piece = adaptive_simpson(
                        lambda w: np.abs(integrand(w, comp, part)), lo, 2.0 * lo, tol / 10.0, 64
                    )
                    if piece < tol:
                        break
                    val += adaptive_simpson(lambda w: integrand(w, comp, part), lo, 2.0 * lo, tol / 10.0, 64)
                    lo *= 2.0
                else:
                    raise HistoryDivergenceError(
                        f"history integral still changing by {piece:.3g} after 20 window doublings"
                    )
                out[comp] += val if part == 0 else 1j * val
        return out

    def erlang_moment(self, order, sigma, omega, t=0.0, tol=1e-10):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return self._moment_at(order, sigma, omega, float(t), tol)
        return np.array([self._moment_at(order, sigma, omega, float(tt), tol) for tt in t])

    def sup_norm(self, tol=1e-10, window=200.0) -> float:
        s = np.linspace(-window, 0.0, 20001)
        return float(np.max(np.sum(np.abs(self(s)), axis=1)))

    def to_string(self) -> str:
        return self.label


def _initial_window(order, sigma, t, tol):
    # envelope tail beyond t + T below tol, assuming |u| <= 1 near the origin
    T = max(order / sigma, 1.0 / sigma)
    while erlang_tail(order, sigma, t + T) >= tol:
        T *= 2.0
    return T


def _fmt_list(vec) -> str:
    return "[" + ",".join(repr(float(v)) for v in vec) + "]"


HISTORY_REGISTRY: dict[str, Callable[[int], object]] = {}


def register_history(name: str, factory: Callable[[int], object]) -> None:
    """Register ``expr:<name>``; ``factory(D)`` returns a history of dimension D."""
    HISTORY_REGISTRY[name] = factory


register_history("zero", lambda D: ConstantHistory(np.zeros(D), label="expr:zero"))
register_history("unit_exp", lambda D: ExponentialHistory(np.ones(D), 1.0, label="expr:unit_exp"))
register_history(
    "damped_cos",
    lambda D: FunctionHistory(
        lambda s: (np.exp(np.asarray(s)) * np.cos(np.asarray(s)))[..., None] * np.ones(D), D, "expr:damped_cos"
    ),
)


def parse_history(text: str, dim: int):
    """Parse ``constant:[...]``, ``exp:<rate>:[...]`` or ``expr:<id>``."""
    import json

    kind, _, rest = text.partition(":")
    if kind == "constant":
        hist = ConstantHistory(json.loads(rest))
    elif kind == "exp":
        rate, _, vec = rest.partition(":")
        hist = ExponentialHistory(json.loads(vec), float(rate))
    elif kind == "expr":
        if rest not in HISTORY_REGISTRY:
            raise ValueError(f"unknown history expression {rest!r}; known: {sorted(HISTORY_REGISTRY)}")
        hist = HISTORY_REGISTRY[rest](dim)
    else:
        raise ValueError(f"history must start with constant:, exp: or expr:, got {text!r}")
    if hist.dim != dim:
        raise ValueError(f"history has dimension {hist.dim}, system has D={dim}")
    return hist
