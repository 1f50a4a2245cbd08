"""Linear Chain Trick: distributed-delay system -> finite-dimensional ODE.

The delay term ``sum_k c_k int alpha_k(t - s) x_d(s) ds`` is replaced by
auxiliary chains. ``V_k`` holds the Erlang convolution of order ``k`` and the
complex chain ``W_n^(k) = u_n^(k) + i v_n^(k)`` holds the convolution with
``theta_k(t) exp(i omega_n t)``. State layout::

    [x (D) | V_1 .. V_N (d each) | u[k,n] in (k, n) order | v[k,n] likewise]

Only the first ``d`` components of every auxiliary block are stored; the
remaining ``D - d`` components of the projected state vanish identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernels import KernelSpec

__all__ = [
    "SpecError",
    "DelaySystemSpec",
    "Block",
    "AugmentedSystem",
    "augmented_dimension",
    "transform",
    "vector_field",
    "initial_state",
    "RHS_REGISTRY",
    "register_rhs",
]


class SpecError(ValueError):
    """A delay system specification violates a structural requirement."""


def augmented_dimension(D: int, d: int, oscillation_counts: Sequence[int]) -> int:
    """``r = D + d * (N + 2 * sum_k M_k)``."""
    return D + d * (len(oscillation_counts) + 2 * sum(oscillation_counts))


@dataclass(frozen=True, eq=False)
class DelaySystemSpec:
    """A distributed-delay system ``x' = F(x, R x)`` with history ``u``.

    ``rhs(x, z)`` receives the state and the full-width delay term (zeros
    beyond index ``d``) and returns ``dx/dt``.
    """

    D: int
    d: int
    kernels: tuple[KernelSpec, ...]
    weights: tuple[float, ...]
    rhs: Callable[[np.ndarray, np.ndarray], np.ndarray]
    history: object
    rhs_name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.D) != self.D or self.D < 1:
            raise SpecError(f"D must be a positive integer, got {self.D!r}")
        if int(self.d) != self.d or not 1 <= self.d <= self.D:
            raise SpecError(f"d must satisfy 1 <= d <= D={self.D}, got {self.d!r}")
        kernels = tuple(self.kernels)
        weights = tuple(float(c) for c in self.weights)
        if not kernels:
            raise SpecError("at least one kernel is required")
        if len(weights) != len(kernels):
            raise SpecError(f"{len(weights)} weights for {len(kernels)} kernels")
        for k, ker in enumerate(kernels, start=1):
            if ker.order != k:
                raise SpecError(f"kernel #{k} has order {ker.order}; kernel k must have Erlang order k")
        sigmas = {ker.sigma for ker in kernels}
        if len(sigmas) != 1:
            raise SpecError(f"all kernels must share one sigma, got {sorted(sigmas)}")
        if getattr(self.history, "dim", self.D) != self.D:
            raise SpecError(f"history dimension {self.history.dim} != D={self.D}")
        object.__setattr__(self, "kernels", kernels)
        object.__setattr__(self, "weights", weights)

    @property
    def N(self) -> int:
        return len(self.kernels)

    @property
    def sigma(self) -> float:
        return self.kernels[0].sigma

    @property
    def oscillation_counts(self) -> tuple[int, ...]:
        return tuple(k.n_osc for k in self.kernels)

    @property
    def dimension(self) -> int:
        return augmented_dimension(self.D, self.d, self.oscillation_counts)

    def delay_kernel(self, t):
        """Effective scalar kernel ``sum_k c_k alpha_k(t)``."""
        from .kernels import eval_kernel

        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for c, ker in zip(self.weights, self.kernels):
            if c != 0.0:
                total = total + c * eval_kernel(ker, t)
        return total

    def evaluate_rhs(self, x, delayed_d) -> np.ndarray:
        """``F(x, z)`` with the ``d`` delayed coordinates padded to width D."""
        z = np.zeros(self.D)
        z[: self.d] = delayed_d
        return np.asarray(self.rhs(np.asarray(x, dtype=float), z), dtype=float)

    def with_kernels(self, kernels: Sequence[KernelSpec]) -> "DelaySystemSpec":
        return DelaySystemSpec(
            self.D, self.d, tuple(kernels), self.weights, self.rhs, self.history, self.rhs_name, dict(self.params)
        )

    def with_history(self, history) -> "DelaySystemSpec":
        return DelaySystemSpec(
            self.D, self.d, self.kernels, self.weights, self.rhs, history, self.rhs_name, dict(self.params)
        )


@dataclass(frozen=True)
class Block:
    name: str
    kind: str  # "x", "V", "u" or "v"
    k: int | None
    n: int | None
    start: int
    stop: int

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)


def _build_layout(spec: DelaySystemSpec) -> tuple[Block, ...]:
    D, d = spec.D, spec.d
    blocks = [Block("x", "x", None, None, 0, D)]
    pos = D
    for k in range(1, spec.N + 1):
        blocks.append(Block(f"V[{k}]", "V", k, None, pos, pos + d))
        pos += d
    for kind in ("u", "v"):
        for k, ker in enumerate(spec.kernels, start=1):
            for n in range(1, ker.n_osc + 1):
                blocks.append(Block(f"{kind}[{k},{n}]", kind, k, n, pos, pos + d))
                pos += d
    return tuple(blocks)


def _check_chains(spec: DelaySystemSpec) -> None:
    # W_n^(k) is driven by W_n^(k-1); the chain reproduces theta_k e^{i w t}
    # only when the predecessor exists and oscillates at the same frequency.
    for k in range(2, spec.N + 1):
        prev, cur = spec.kernels[k - 2], spec.kernels[k - 1]
        for n, osc in enumerate(cur.oscillations, start=1):
            if n > prev.n_osc:
                raise SpecError(
                    f"oscillation block ({k},{n}) has no predecessor ({k - 1},{n}); "
                    f"chains require M_{k} <= M_{k - 1}"
                )
            w_prev = prev.oscillations[n - 1].omega
            if not math.isclose(osc.omega, w_prev, rel_tol=1e-12, abs_tol=1e-15):
                raise SpecError(
                    f"oscillation block ({k},{n}) has omega={osc.omega} but its predecessor has "
                    f"omega={w_prev}; a chain must keep one frequency"
                )


@dataclass(eq=False)
class AugmentedSystem:
    """Autonomous ODE ``X' = G(X)`` of dimension ``r`` produced by :func:`transform`."""

    spec: DelaySystemSpec | None
    layout: tuple[Block, ...]
    initial_state: np.ndarray
    rhs_func: Callable[[np.ndarray], np.ndarray]
    sigma: float = 1.0
    delay_matrix: np.ndarray | None = None
    chain_matrix: np.ndarray | None = None

    @property
    def r(self) -> int:
        return self.layout[-1].stop

    @property
    def names(self) -> list[str]:
        return [b.name for b in self.layout]

    def rhs(self, X) -> np.ndarray:
        return self.rhs_func(np.asarray(X, dtype=float))

    __call__ = rhs

    def block(self, name: str) -> slice:
        for b in self.layout:
            if b.name == name:
                return b.slice
        raise KeyError(name)

    def split(self, X) -> dict[str, np.ndarray]:
        X = np.asarray(X)
        return {b.name: X[..., b.slice] for b in self.layout}

    def full_block(self, X, name: str) -> np.ndarray:
        """Block ``name`` padded with exact zeros to full width D."""
        X = np.asarray(X)
        D = self.layout[0].stop
        vals = X[..., self.block(name)]
        out = np.zeros(vals.shape[:-1] + (D,))
        out[..., : vals.shape[-1]] = vals
        return out

    def column_labels(self) -> list[str]:
        labels = []
        for b in self.layout:
            width = b.stop - b.start
            labels.extend(b.name if width == 1 else f"{b.name}_{i + 1}" for i in range(width))
        return labels


def _linear_operators(spec: DelaySystemSpec, layout: tuple[Block, ...]):
    """Delay-readout matrix C (d x r) and chain matrix M ((r - D) x r)."""
    D, d, sig = spec.D, spec.d, spec.sigma
    r = layout[-1].stop
    index = {b.name: b.start for b in layout}
    eye = np.eye(d)
    C = np.zeros((d, r))
    M = np.zeros((r, r))

    def put(mat, row_block, col_start, coeff):
        mat[row_block : row_block + d, col_start : col_start + d] += coeff * eye

    for k, (c, ker) in enumerate(zip(spec.weights, spec.kernels), start=1):
        C[:, index[f"V[{k}]"] : index[f"V[{k}]"] + d] += c * ker.a * eye
        for n, osc in enumerate(ker.oscillations, start=1):
            C[:, index[f"u[{k},{n}]"] : index[f"u[{k},{n}]"] + d] += c * osc.eps * eye
            C[:, index[f"v[{k},{n}]"] : index[f"v[{k},{n}]"] + d] += c * osc.mu * eye

    for k, ker in enumerate(spec.kernels, start=1):
        row = index[f"V[{k}]"]
        put(M, row, row, -sig)
        put(M, row, 0 if k == 1 else index[f"V[{k - 1}]"], sig)
        for n, osc in enumerate(ker.oscillations, start=1):
            ru, rv = index[f"u[{k},{n}]"], index[f"v[{k},{n}]"]
            w = osc.omega
            put(M, ru, ru, -sig)
            put(M, ru, rv, -w)
            put(M, rv, rv, -sig)
            put(M, rv, ru, w)
            if k == 1:
                put(M, ru, 0, sig)
            else:
                put(M, ru, index[f"u[{k - 1},{n}]"], sig)
                put(M, rv, index[f"v[{k - 1},{n}]"], sig)
    return C, M[D:]


def vector_field(spec: DelaySystemSpec):
    """Layout, right-hand side ``G`` and the linear operators of the augmented system."""
    if not spec.kernels:
        raise SpecError("at least one kernel is required")
    if len({k.sigma for k in spec.kernels}) != 1:
        raise SpecError("all kernels must share one sigma")
    _check_chains(spec)
    layout = _build_layout(spec)
    r = layout[-1].stop
    if r != spec.dimension:  # pragma: no cover - layout and formula are built independently
        raise AssertionError(f"layout size {r} disagrees with dimension formula {spec.dimension}")
    C, M = _linear_operators(spec, layout)
    D, d = spec.D, spec.d
    F = spec.rhs

    def G(X):
        out = np.empty(r)
        z = np.zeros(D)
        z[:d] = C @ X
        out[:D] = F(X[:D], z)
        out[D:] = M @ X
        return out

    return layout, G, C, M


def transform(spec: DelaySystemSpec, tail_tol: float = 1e-10) -> AugmentedSystem:
    """Apply the Linear Chain Trick to ``spec``."""
    layout, G, C, M = vector_field(spec)
    X0 = initial_state(spec, tail_tol, layout=layout)
    return AugmentedSystem(spec, layout, X0, G, spec.sigma, C, M)


def initial_state(spec: DelaySystemSpec, tail_tol: float = 1e-10, layout=None) -> np.ndarray:
    """Chain initial conditions from the history.

    ``x(0) = u(0)``, ``V_k(0) = int theta_k(-s) J u(s) ds`` and
    ``u + i v = int theta_k(-s) exp(-i omega s) J u(s) ds``.
    """
    if not tail_tol > 0:
        raise ValueError("tail_tol must be positive")
    layout = layout or _build_layout(spec)
    hist, d, sig = spec.history, spec.d, spec.sigma
    X0 = np.zeros(layout[-1].stop)
    X0[: spec.D] = hist(0.0)
    for b in layout:
        if b.kind == "V":
            X0[b.slice] = hist.erlang_moment(b.k, sig, 0.0, 0.0, tail_tol).real[:d]
        elif b.kind in ("u", "v"):
            omega = spec.kernels[b.k - 1].oscillations[b.n - 1].omega
            W = hist.erlang_moment(b.k, sig, omega, 0.0, tail_tol)[:d]
            X0[b.slice] = W.real if b.kind == "u" else W.imag
    return X0


RHS_REGISTRY: dict[str, Callable[[dict, int], Callable]] = {}


def register_rhs(name: str, factory: Callable[[dict, int], Callable]) -> None:
    """Register ``builtin:<name>``; ``factory(params, D)`` returns ``F(x, z)``."""
    RHS_REGISTRY[name] = factory
