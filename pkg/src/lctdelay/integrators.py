"""Time integration.

* :func:`integrate_ode` integrates an augmented (chain) system with classic RK4
  or an adaptive Dormand-Prince 5(4) pair.
* :func:`integrate_direct` integrates the original distributed-delay equation
  without any chain variables: every right-hand side evaluation convolves the
  stored solution with the kernel (fourth-order Gregory end corrections on the
  grid, Simpson on the partial last step) and adds the history part in closed
  form or by Gauss-Legendre quadrature.
* :func:`continuity_gap` compares two kernel choices and checks the Gronwall
  type bound on the distance of their solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .history import ConstantHistory, ExponentialHistory
from .kernels import kernel_difference_norm, l1_norm, truncation_point
from .lct import AugmentedSystem, DelaySystemSpec

__all__ = [
    "Trajectory",
    "ContinuityCertificate",
    "StepUnderflowError",
    "integrate_ode",
    "integrate_direct",
    "history_term",
    "continuity_gap",
    "BLOWUP_THRESHOLD",
    "LIPSCHITZ_SAFETY",
]

BLOWUP_THRESHOLD = 1e12
LIPSCHITZ_SAFETY = 1.5


class StepUnderflowError(RuntimeError):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)
    blowup: bool = False
    labels: list | None = None
    delay: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.times.size

    def component(self, i: int = 0) -> np.ndarray:
        return self.states[:, i]


def _check_T(T):
    if not (math.isfinite(T) and T > 0):
        raise ValueError(f"T must be positive and finite, got {T!r}")


def _rk4(f, X0, T, h):
    n = max(1, int(math.ceil(T / h - 1e-9)))
    h = T / n
    times = np.linspace(0.0, T, n + 1)
    out = np.empty((n + 1, X0.size))
    out[0] = X = X0
    for i in range(n):
        k1 = f(X)
        k2 = f(X + 0.5 * h * k1)
        k3 = f(X + 0.5 * h * k2)
        k4 = f(X + h * k3)
        X = X + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = X
        if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > BLOWUP_THRESHOLD:
            return times[: i + 2], out[: i + 2], True, h
    return times, out, False, h


# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _dopri(f, X0, T, rtol, atol, h0=None):
    t, X = 0.0, X0.copy()
    times, states = [0.0], [X.copy()]
    k = np.empty((7, X.size))
    k[0] = f(X)
    h = h0 or min(T, 0.01 * (1.0 + np.max(np.abs(X))) / max(1e-12, np.max(np.abs(k[0]))))
    h = min(h, T)
    while t < T:
        if h < 1e-14 * max(1.0, t):
            raise StepUnderflowError(f"adaptive step underflow at t={t}")
        h = min(h, T - t)
        for s in range(1, 7):
            k[s] = f(X + h * np.dot(_A[s], k[:s]))
        X5 = X + h * (_B5 @ k)
        err_vec = h * ((_B5 - _B4) @ k)
        scale = atol + rtol * np.maximum(np.abs(X), np.abs(X5))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            t = T if T - t - h < 1e-14 * T else t + h
            X = X5
            k[0] = k[6]
            times.append(t)
            states.append(X.copy())
            if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > BLOWUP_THRESHOLD:
                return np.array(times), np.array(states), True
        fac = 0.9 * err ** -0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, fac))
    return np.array(times), np.array(states), False


def integrate_ode(
    system: AugmentedSystem,
    T: float,
    method: str = "rk4",
    h: float | None = None,
    rtol: float = 1e-8,
    atol: float = 1e-12,
    X0=None,
) -> Trajectory:
    """Integrate ``X' = G(X)`` on ``[0, T]``.

    ``rk4`` uses a fixed step (default ``min(1e-2, 0.05 / sigma)``, shrunk so
    that it divides ``T``); ``rk45`` is adaptive with the given tolerances.
    Integration stops early, with ``blowup`` set, once ``max|X| > 1e12``.
    """
    _check_T(T)
    X0 = np.array(system.initial_state if X0 is None else X0, dtype=float)
    if not np.all(np.isfinite(X0)):
        raise ValueError("initial state must be finite")
    f = system.rhs
    labels = system.column_labels()
    if method == "rk4":
        if h is None:
            h = min(1e-2, 0.05 / system.sigma)
        if not h > 0:
            raise ValueError("step must be positive")
        times, states, blow, h_used = _rk4(f, X0, T, h)
        meta = {"method": "rk4", "step": h_used}
    elif method == "rk45":
        times, states, blow = _dopri(f, X0, T, rtol, atol, h)
        meta = {"method": "rk45", "rtol": rtol, "atol": atol, "steps": times.size - 1}
    else:
        raise ValueError(f"unknown method {method!r}; use 'rk4' or 'rk45'")
    return Trajectory(times, states, meta, blow, labels)


def _gauss_legendre_history(spec: DelaySystemSpec, times: np.ndarray, tail_tol: float) -> np.ndarray:
    # int_0^W A(t + w) u_d(-w) dw by composite 8-point Gauss-Legendre.
    hist, d = spec.history, spec.d
    W = truncation_point(list(spec.kernels), tail_tol)
    if W == 0.0:
        return np.zeros((times.size, d))
    rate = max(spec.sigma, max(k.max_frequency for k in spec.kernels))
    panels = int(max(16, math.ceil(4.0 * W * rate)))
    x, wts = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, W, panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    weights = (half[:, None] * wts[None, :]).ravel()
    uw = hist(-nodes)[:, :d] * weights[:, None]  # (q, d)
    out = np.empty((times.size, d))
    chunk = max(1, 2_000_000 // nodes.size)
    for i in range(0, times.size, chunk):
        t = times[i : i + chunk]
        out[i : i + chunk] = spec.delay_kernel(t[:, None] + nodes[None, :]) @ uw
    return out


def history_term(spec: DelaySystemSpec, times, tail_tol: float = 1e-12) -> np.ndarray:
    """``sum_k c_k int_t^inf alpha_k(tau) J u(t - tau) dtau`` at each time (shape ``(m, d)``)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    hist, d, sig = spec.history, spec.d, spec.sigma
    if not isinstance(hist, (ConstantHistory, ExponentialHistory)):
        return _gauss_legendre_history(spec, times, tail_tol)
    out = np.zeros((times.size, d))
    for k, (c, ker) in enumerate(zip(spec.weights, spec.kernels), start=1):
        if c == 0.0:
            continue
        out += c * ker.a * hist.erlang_moment(k, sig, 0.0, times).real[:, :d]
        for osc in ker.oscillations:
            W = hist.erlang_moment(k, sig, osc.omega, times)[:, :d]
            out += c * (osc.eps * W.real + osc.mu * W.imag)
    return out


def _gregory_weights(n: int) -> np.ndarray:
    """Quadrature weights (without the factor h) for n intervals on a uniform grid."""
    if n == 0:
        return np.zeros(1)
    if n == 1:
        return np.array([0.5, 0.5])
    if n == 2:
        return np.array([1.0, 4.0, 1.0]) / 3.0
    if n == 3:
        return np.array([3.0, 9.0, 9.0, 3.0]) / 8.0
    if n == 4:
        return np.array([14.0, 64.0, 24.0, 64.0, 14.0]) / 45.0
    w = np.ones(n + 1)
    end = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])
    w[:3] = end
    w[-3:] = end[::-1]
    return w


def integrate_direct(
    spec: DelaySystemSpec, T: float, h: float = 1e-3, tail_tol: float = 1e-12, keep_delay: bool = False
) -> Trajectory:
    """RK4 on ``x' = F(x, sum_k c_k int alpha_k(t - s) J x(s) ds)`` with full-memory convolution.

    Past values inside a step come from quadratic interpolation through
    ``x_{n-1}``, ``x_n`` and the current stage value (linear on the first step).
    """
    _check_T(T)
    if not h > 0:
        raise ValueError("step must be positive")
    wmax = max(k.max_frequency for k in spec.kernels)
    if h * wmax > 0.5:
        raise ValueError(f"step h={h} too large for kernel frequency {wmax} (need h*omega <= 0.5)")
    n_steps = max(1, int(math.ceil(T / h - 1e-9)))
    h = T / n_steps
    D, d = spec.D, spec.d
    offs = np.arange(n_steps + 2) * h
    A_int = spec.delay_kernel(offs)
    A_half = spec.delay_kernel(offs + 0.5 * h)
    A_q = float(spec.delay_kernel(0.25 * h))
    H = history_term(spec, np.arange(2 * n_steps + 2) * (0.5 * h), tail_tol)  # at half-step multiples

    xs = np.empty((n_steps + 1, D))
    xs[0] = spec.history(0.0)
    zs = np.empty((n_steps + 1, d)) if keep_delay else None
    pad = np.zeros(D)

    def F(x, zd):
        pad[:d] = zd
        return np.asarray(spec.rhs(x, pad), dtype=float)

    def grid_conv(n, kern):
        # h * sum_j w_j kern[n - j] x_d[j]  over nodes 0..n
        if n == 0:
            return np.zeros(d)
        w = _gregory_weights(n)
        vals = kern[n::-1] * w
        return h * (vals @ xs[: n + 1, :d])

    def interp_mid(n, tau, xstage):
        # x_d at t_n + tau / 2 from x_{n-1}, x_n and x(t_n + tau)
        xn = xs[n, :d]
        if n == 0:
            return 0.5 * (xn + xstage)
        xp = xs[n - 1, :d]
        p = 0.5 * tau
        l_prev = p * (p - tau) / (h * (h + tau))
        l_n = -(p + h) * (p - tau) / (h * tau)
        l_s = (p + h) * p / ((tau + h) * tau)
        return l_prev * xp + l_n * xn + l_s * xstage

    blow = False
    n_done = n_steps
    x = xs[0].copy()
    for n in range(n_steps):
        c0 = grid_conv(n, A_int)
        z1 = c0 + H[2 * n]
        if keep_delay:
            zs[n] = z1
        k1 = F(x, z1)
        c_half = grid_conv(n, A_half)
        X2 = x + 0.5 * h * k1
        tail2 = (0.5 * h / 6.0) * (A_half[0] * x[:d] + 4 * A_q * interp_mid(n, 0.5 * h, X2[:d]) + A_int[0] * X2[:d])
        k2 = F(X2, c_half + tail2 + H[2 * n + 1])
        X3 = x + 0.5 * h * k2
        tail3 = (0.5 * h / 6.0) * (A_half[0] * x[:d] + 4 * A_q * interp_mid(n, 0.5 * h, X3[:d]) + A_int[0] * X3[:d])
        k3 = F(X3, c_half + tail3 + H[2 * n + 1])
        X4 = x + h * k3
        c_full = grid_conv(n, A_int[1:])
        tail4 = (h / 6.0) * (A_int[1] * x[:d] + 4 * A_half[0] * interp_mid(n, h, X4[:d]) + A_int[0] * X4[:d])
        k4 = F(X4, c_full + tail4 + H[2 * n + 2])
        x = x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        xs[n + 1] = x
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP_THRESHOLD:
            blow, n_done = True, n + 1
            break
    if keep_delay and not blow:
        zs[n_steps] = grid_conv(n_steps, A_int) + H[2 * n_steps]
    times = np.arange(n_done + 1) * h
    labels = ["x"] if D == 1 else [f"x_{i + 1}" for i in range(D)]
    traj = Trajectory(times, xs[: n_done + 1].copy(), {"method": "direct-rk4", "step": h}, blow, labels)
    if keep_delay:
        traj.delay = zs[: n_done + 1] if not blow else zs[:n_done]
    return traj


@dataclass(frozen=True)
class ContinuityCertificate:
    delta_T: float
    bound: float
    L: float
    Omega_N: float
    satisfied: bool
    kernel_distance: float = 0.0
    sup_x2: float = 0.0
    T: float = 0.0
    safety_factor: float = LIPSCHITZ_SAFETY

    def to_dict(self) -> dict:
        return {
            "delta_T": self.delta_T,
            "bound": self.bound,
            "L": self.L,
            "Omega_N": self.Omega_N,
            "satisfied": self.satisfied,
            "kernel_distance": self.kernel_distance,
            "sup_x2": self.sup_x2,
            "T": self.T,
            "safety_factor": self.safety_factor,
        }


def _lipschitz_estimate(spec: DelaySystemSpec, xs: np.ndarray, zs: np.ndarray) -> float:
    # max over samples of max(||dF/dx||_1, ||dF/dz||_1) with induced 1-norms
    D = spec.D
    eps = np.finfo(float).eps ** (1.0 / 3.0)
    best = 0.0
    idx = np.unique(np.linspace(0, len(xs) - 1, min(len(xs), 200)).astype(int))
    for i in idx:
        x = xs[i]
        z = np.zeros(D)
        z[: spec.d] = zs[i]
        Jx = np.empty((D, D))
        Jz = np.empty((D, D))
        for j in range(D):
            hx = eps * max(1.0, abs(x[j]))
            e = np.zeros(D)
            e[j] = hx
            Jx[:, j] = (np.asarray(spec.rhs(x + e, z)) - np.asarray(spec.rhs(x - e, z))) / (2 * hx)
            hz = eps * max(1.0, abs(z[j]))
            e[j] = hz
            Jz[:, j] = (np.asarray(spec.rhs(x, z + e)) - np.asarray(spec.rhs(x, z - e))) / (2 * hz)
        norm = max(np.max(np.sum(np.abs(Jx), axis=0)), np.max(np.sum(np.abs(Jz), axis=0)))
        best = max(best, float(norm))
    return best


def _same_rhs(spec1: DelaySystemSpec, spec2: DelaySystemSpec) -> bool:
    probes = np.random.default_rng(0).uniform(-2.0, 2.0, size=(8, 2, spec1.D))
    return all(np.array_equal(spec1.rhs(x, z), spec2.rhs(x, z)) for x, z in probes)


def continuity_gap(
    spec1: DelaySystemSpec, spec2: DelaySystemSpec, T: float, h: float = 1e-2, tail_tol: float = 1e-10
) -> ContinuityCertificate:
    """Distance of two solutions that differ only in their kernels, and its a priori bound.

    ``bound = L T sup||x2|| [sum_k |c_k| ||alpha2_k - alpha1_k||_1] exp(Omega_N L T)``
    where sup runs over the history and the computed trajectory, ``Omega_N =
    1 + sum_k |c_k| ||alpha1_k||_1`` and ``L`` is a sampled Lipschitz estimate of
    F inflated by a safety factor of 1.5.
    """
    if (spec1.D, spec1.d, spec1.weights) != (spec2.D, spec2.d, spec2.weights):
        raise ValueError("specs must share D, d and weights")
    if spec1.history is not spec2.history and spec1.history.to_string() != spec2.history.to_string():
        raise ValueError("specs must share the same history")
    if spec1.rhs is not spec2.rhs and not _same_rhs(spec1, spec2):
        raise ValueError("specs must share the same right-hand side")
    if len(spec1.kernels) != len(spec2.kernels):
        raise ValueError("specs must have the same number of kernels")
    tr1 = integrate_direct(spec1, T, h, keep_delay=True)
    tr2 = integrate_direct(spec2, T, h, keep_delay=True)
    if tr1.blowup or tr2.blowup:
        raise FloatingPointError("trajectory blew up; continuity estimate not available")
    delta_T = float(np.max(np.sum(np.abs(tr2.states - tr1.states), axis=1)))
    dist = sum(abs(c) * kernel_difference_norm(k1, k2, tail_tol) for c, k1, k2 in zip(spec1.weights, spec1.kernels, spec2.kernels))
    omega_n = 1.0 + sum(abs(c) * l1_norm(k, tail_tol) for c, k in zip(spec1.weights, spec1.kernels))
    sup_x2 = max(float(np.max(np.sum(np.abs(tr2.states), axis=1))), spec2.history.sup_norm())
    L = LIPSCHITZ_SAFETY * max(
        _lipschitz_estimate(spec1, tr1.states, tr1.delay), _lipschitz_estimate(spec2, tr2.states, tr2.delay)
    )
    bound = L * T * sup_x2 * dist * math.exp(omega_n * L * T) if dist > 0 else 0.0
    return ContinuityCertificate(
        delta_T, bound, L, omega_n, delta_T <= bound * (1 + 1e-9), dist, sup_x2, float(T)
    )
