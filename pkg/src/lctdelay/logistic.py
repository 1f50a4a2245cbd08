"""Logistic growth with an oscillating Erlang memory: the worked 7D example.

    x' = r x (1 - (alpha (x) x) / K),  alpha = theta_2 + eps * Re[sigma^2 t e^{(-sigma + i Omega) t}]

After the chain reduction the state is ``[x, V1, V2, u1, v1, u2, v2]`` and the
vector field is written out by hand here, together with its analytic
Jacobian, the closed-form characteristic coefficients and the 3D subsystem
that governs the ``eps = 0`` case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .history import ConstantHistory
from .kernels import KernelSpec, Oscillation
from .lct import AugmentedSystem, Block, DelaySystemSpec, register_rhs, transform
from .stability import scaled_logistic_coefficients, scaling_check

__all__ = [
    "LogisticParams",
    "STATE_NAMES",
    "logistic_rhs",
    "logistic_jacobian",
    "logistic_delay_rhs",
    "logistic_spec",
    "logistic_system",
    "canonical_order",
    "closed_form_coefficients",
    "subsystem_3d",
    "subsystem_3d_jacobian",
]

STATE_NAMES = ("x", "V1", "V2", "u1", "v1", "u2", "v2")


@dataclass(frozen=True)
class LogisticParams:
    r: float
    K: float
    sigma: float
    Omega: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("r", "K", "sigma"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive, got {val!r}")
        if not (math.isfinite(self.Omega) and self.Omega >= 0):
            raise ValueError(f"Omega must be nonnegative, got {self.Omega!r}")
        if not math.isfinite(self.epsilon):
            raise ValueError("epsilon must be finite")

    @property
    def theta(self) -> float:
        return (self.Omega / self.sigma) ** 2

    @property
    def denominator(self) -> float:
        """``(1 + theta)^2 - eps (theta - 1)``; the equilibrium escapes to infinity at zero."""
        th = self.theta
        return (1.0 + th) ** 2 - self.epsilon * (th - 1.0)

    @property
    def mu0(self) -> float:
        return self.r / self.sigma

    @property
    def mu(self) -> float:
        th = self.theta
        return self.mu0 * (1.0 + th) ** 2 / self.denominator

    def with_(self, **changes) -> "LogisticParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"r": self.r, "K": self.K, "sigma": self.sigma, "Omega": self.Omega, "epsilon": self.epsilon}


def logistic_rhs(p: LogisticParams, X) -> np.ndarray:
    x, V1, V2, u1, v1, u2, v2 = np.asarray(X, dtype=float)
    s, W = p.sigma, p.Omega
    return np.array(
        [
            p.r * x * (1.0 - (V2 + p.epsilon * u2) / p.K),
            -s * V1 + s * x,
            -s * V2 + s * V1,
            -s * u1 - W * v1 + s * x,
            -s * v1 + W * u1,
            -s * u2 - W * v2 + s * u1,
            -s * v2 + W * u2 + s * v1,
        ]
    )


def logistic_jacobian(p: LogisticParams, X) -> np.ndarray:
    x, V1, V2, u1, v1, u2, v2 = np.asarray(X, dtype=float)
    s, W, r, K, e = p.sigma, p.Omega, p.r, p.K, p.epsilon
    J = np.array(
        [
            [0.0, 0, 0, 0, 0, 0, 0],
            [s, -s, 0, 0, 0, 0, 0],
            [0, s, -s, 0, 0, 0, 0],
            [s, 0, 0, -s, -W, 0, 0],
            [0, 0, 0, W, -s, 0, 0],
            [0, 0, 0, s, 0, -s, -W],
            [0, 0, 0, 0, s, W, -s],
        ]
    )
    J[0, 0] = r * (1.0 - (V2 + e * u2) / K)
    J[0, 2] = -r * x / K
    J[0, 5] = -e * r * x / K
    return J


def logistic_delay_rhs(r: float, K: float):
    """``F(x, z) = r x (1 - z / K)`` in the delay-system form."""

    def F(x, z):
        return r * x * (1.0 - z / K)

    return F


def _registry_factory(params: dict, D: int):
    if D != 1:
        raise ValueError("builtin:logistic is one-dimensional (D = 1)")
    try:
        return logistic_delay_rhs(float(params["r"]), float(params["K"]))
    except KeyError as exc:
        raise ValueError(f"builtin:logistic needs parameter {exc.args[0]!r}") from None


register_rhs("logistic", _registry_factory)


def logistic_spec(p: LogisticParams, history=None) -> DelaySystemSpec:
    """The logistic model as a general delay system (D = d = 1, N = 2, c = (0, 1)).

    Kernel 1 carries the chain head of the oscillation (weight zero), kernel 2
    is ``theta_2 + eps cos(Omega t) theta_2``.
    """
    k1 = KernelSpec(1, p.sigma, 1.0, (Oscillation(0.0, 0.0, p.Omega),))
    k2 = KernelSpec(2, p.sigma, 1.0, (Oscillation(p.epsilon, 0.0, p.Omega),))
    if history is None:
        history = ConstantHistory([p.K])
    return DelaySystemSpec(
        1, 1, (k1, k2), (0.0, 1.0), logistic_delay_rhs(p.r, p.K), history, "logistic", p.to_dict()
    )


def canonical_order(system: AugmentedSystem) -> np.ndarray:
    """Indices that reorder a transformed logistic state to ``[x, V1, V2, u1, v1, u2, v2]``."""
    names = ["x", "V[1]", "V[2]", "u[1,1]", "v[1,1]", "u[2,1]", "v[2,1]"]
    return np.array([system.block(n).start for n in names])


def logistic_system(p: LogisticParams, X0=None) -> AugmentedSystem:
    """Hand-written 7D system in the order ``[x, V1, V2, u1, v1, u2, v2]``."""
    layout = tuple(Block(n, n[0], None, None, i, i + 1) for i, n in enumerate(STATE_NAMES))
    if X0 is None:
        general = transform(logistic_spec(p))
        X0 = general.initial_state[canonical_order(general)]
    return AugmentedSystem(None, layout, np.asarray(X0, dtype=float), lambda X: logistic_rhs(p, X), p.sigma)


def closed_form_coefficients(p: LogisticParams) -> np.ndarray:
    """``a_1 .. a_7`` of the characteristic polynomial at the nontrivial equilibrium."""
    return scaling_check(p.sigma, scaled_logistic_coefficients(p.theta, p.epsilon, p.mu0))


def _rhs3(p: LogisticParams, X):
    x, V1, V2 = X
    s = p.sigma
    return np.array([p.r * x * (1.0 - V2 / p.K), -s * V1 + s * x, -s * V2 + s * V1])


def subsystem_3d_jacobian(p: LogisticParams, X) -> np.ndarray:
    x, V1, V2 = np.asarray(X, dtype=float)
    s = p.sigma
    return np.array([[p.r * (1.0 - V2 / p.K), 0.0, -p.r * x / p.K], [s, -s, 0.0], [0.0, s, -s]])


def subsystem_3d(p: LogisticParams, X0=None) -> AugmentedSystem:
    """The ``(x, V1, V2)`` system that decouples when ``eps = 0``."""
    layout = tuple(Block(n, n[0], None, None, i, i + 1) for i, n in enumerate(STATE_NAMES[:3]))
    if X0 is None:
        X0 = np.full(3, p.K)
    return AugmentedSystem(None, layout, np.asarray(X0, dtype=float), lambda X: _rhs3(p, X), p.sigma)
