"""Hopf loci and phase diagrams for the logistic model in the (sigma, epsilon) plane.

The Hopf condition is ``D_6 = 0`` with ``D_1 .. D_5 > 0`` where ``D_j`` are the
Hurwitz determinants of the 7th-order characteristic polynomial at the
nontrivial equilibrium. Determinants are evaluated on the sigma-scaled
coefficients ``b_j = a_j / sigma^j``; this leaves every sign unchanged
(``D_j(a) = sigma^(j(j+1)/2) D_j(b)``) and keeps magnitudes moderate.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .equilibria import logistic_equilibrium
from .logistic import LogisticParams, logistic_jacobian
from .stability import Verdict, char_poly, eigenvalues, hurwitz_determinants, routh_hurwitz

__all__ = [
    "LogisticHopfModel",
    "HopfPoint",
    "HopfLocus",
    "PhaseDiagram",
    "BracketError",
    "DegeneratePointWarning",
    "hopf_point_at",
    "trace_locus",
    "hopf_slope",
    "phase_diagram",
    "CLASSES",
]

CLASSES = ("Stable", "Unstable", "Critical", "Singular")


class BracketError(ValueError):
    pass


class DegeneratePointWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class LogisticHopfModel:
    r: float
    K: float = 1.0
    Omega: float = 0.0

    def params(self, sigma: float, epsilon: float) -> LogisticParams:
        return LogisticParams(self.r, self.K, sigma, self.Omega, epsilon)

    @property
    def order(self) -> int:
        return 7

    def equilibrium_state(self, sigma, epsilon) -> np.ndarray:
        return logistic_equilibrium(self.r, self.K, sigma, self.Omega, epsilon).state

    def jacobian(self, sigma, epsilon) -> np.ndarray:
        p = self.params(sigma, epsilon)
        return logistic_jacobian(p, self.equilibrium_state(sigma, epsilon))

    def scaled_coefficients(self, sigma, epsilon) -> np.ndarray:
        a = char_poly(self.jacobian(sigma, epsilon)).coefficients
        return a / sigma ** np.arange(1, a.size + 1)

    def scaled_determinants(self, sigma, epsilon) -> np.ndarray:
        return hurwitz_determinants(self.scaled_coefficients(sigma, epsilon))

    def determinants(self, sigma, epsilon) -> np.ndarray:
        """Hurwitz determinants of the unscaled characteristic polynomial."""
        j = np.arange(1, self.order + 1)
        return self.scaled_determinants(sigma, epsilon) * sigma ** (j * (j + 1) / 2)

    def critical(self, sigma, epsilon) -> float:
        """Scaled ``D_{r-1}``; its zero set is the Hopf locus."""
        return float(self.scaled_determinants(sigma, epsilon)[self.order - 2])

    def singular_epsilon(self, sigma) -> float:
        """``eps`` where the equilibrium escapes to infinity (``inf`` when ``theta = 1``)."""
        th = (self.Omega / sigma) ** 2
        return math.inf if th == 1.0 else (1.0 + th) ** 2 / (th - 1.0)


@dataclass(frozen=True)
class HopfPoint:
    sigma: float
    epsilon: float
    transversality: float
    frequency: float
    determinants: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class HopfLocus:
    points: list
    slope_at_origin: float | None
    stop_reason: str

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([p.sigma for p in self.points])

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([p.epsilon for p in self.points])

    @property
    def transversality(self) -> np.ndarray:
        return np.array([p.transversality for p in self.points])


def _bisect(f, lo, hi, flo, tol):
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hopf_point_at(epsilon: float, model: LogisticHopfModel, bracket=(0.05, 3.0), tol: float = 1e-10) -> HopfPoint:
    """Bisect ``D_{r-1}(sigma, epsilon) = 0`` in ``sigma`` over ``bracket``."""
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise BracketError(f"invalid sigma bracket {bracket}")
    f = lambda s: model.critical(s, epsilon)  # noqa: E731
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        root = lo
    elif fhi == 0.0:
        root = hi
    elif (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change of D_{model.order - 1} on sigma in [{lo}, {hi}] at epsilon={epsilon}")
    else:
        root = _bisect(f, lo, hi, flo, tol)
    dets = model.determinants(root, epsilon)
    h = 1e-6 * max(1.0, root)
    idx = model.order - 2
    trans = float((model.determinants(root + h, epsilon)[idx] - model.determinants(root - h, epsilon)[idx]) / (2 * h))
    if abs(trans) < 1e-12:
        warnings.warn(f"degenerate Hopf point at sigma={root}, epsilon={epsilon}", DegeneratePointWarning)
    eig = eigenvalues(model.jacobian(root, epsilon))
    upper = eig[eig.imag > 0]
    freq = float(upper[np.argmin(np.abs(upper.real))].imag) if upper.size else 0.0
    return HopfPoint(root, float(epsilon), trans, freq, dets)


def _lower_positive(point: HopfPoint, model) -> bool:
    return bool(np.all(model.scaled_determinants(point.sigma, point.epsilon)[: model.order - 2] > 0))


def hopf_slope(model: LogisticHopfModel, sigma0: float, epsilon0: float = 0.0, h: float = 1e-3) -> float:
    """``d sigma / d eps`` along the locus from the implicit-function theorem.

    Both partial derivatives of the scaled ``D_{r-1}`` use central differences
    with one Richardson extrapolation step.
    """

    def partial(fun, x):
        d1 = (fun(x + h) - fun(x - h)) / (2 * h)
        d2 = (fun(x + h / 2) - fun(x - h / 2)) / h
        return (4 * d2 - d1) / 3

    ds = partial(lambda s: model.critical(s, epsilon0), sigma0)
    de = partial(lambda e: model.critical(sigma0, e), epsilon0)
    return -de / ds


def _continue(model, eps, prev, guess, width, cap, tol):
    # bracket the root near `guess` without letting the bracket reach another branch
    w = width
    while w <= cap:
        lo, hi = max(guess - w, 0.5 * min(guess, prev)), guess + w
        try:
            if model.critical(lo, eps) * model.critical(hi, eps) < 0:
                point = hopf_point_at(eps, model, (lo, hi), tol)
                return point if abs(point.sigma - prev) <= cap else None
        except ZeroDivisionError:
            return None
        w *= 2.0
    return None


def trace_locus(
    model: LogisticHopfModel,
    epsilon_range=(0.0, 2.0),
    steps: int = 100,
    tol: float = 1e-10,
    bracket=(0.05, 3.0),
) -> HopfLocus:
    """Follow the Hopf curve in ``epsilon`` by re-bracketing around the previous root.

    The nominal step is ``(eps_end - eps_start) / steps``; it is halved when no
    nearby bracket exists, down to ``1e-6`` of the range. Tracing stops at the
    end of the range, when a lower determinant loses positivity or when the
    step underflows (typically a fold of the curve).
    """
    e0, e1 = map(float, epsilon_range)
    first = hopf_point_at(e0, model, bracket, tol)
    slope = hopf_slope(model, first.sigma, e0) if e0 == 0.0 else None
    if not _lower_positive(first, model):
        return HopfLocus([], slope, f"D_j <= 0 for some j < {model.order - 1} at epsilon={e0}")
    points = [first]
    if steps < 1 or e1 == e0:
        return HopfLocus(points, slope, "end of range")
    nominal = (e1 - e0) / steps
    min_step = 1e-6 * abs(e1 - e0)
    de = nominal
    eps = e0
    reason = "end of range"
    while abs(e1 - eps) > 1e-12 * max(1.0, abs(e1)):
        target = e1 if abs(e1 - eps) <= abs(de) * (1 + 1e-9) else eps + de
        prev = points[-1].sigma
        ds = 0.0
        if len(points) >= 2:
            slope_est = (points[-1].sigma - points[-2].sigma) / (points[-1].epsilon - points[-2].epsilon)
            ds = slope_est * (target - eps)
        guess = prev + ds
        cap = max(0.05 * prev, 4.0 * abs(ds))
        found = _continue(model, target, prev, guess, max(0.25 * cap, 1e-3 * prev), cap, tol)
        if found is None:
            de *= 0.5
            if abs(de) < min_step:
                reason = f"bracket failed at epsilon={target:.6g}"
                break
            continue
        if not _lower_positive(found, model):
            reason = f"D_j <= 0 for some j < {model.order - 1} at epsilon={target:.6g}"
            break
        points.append(found)
        eps = target
        de = nominal if abs(de) * 2 > abs(nominal) else de * 2
    return HopfLocus(points, slope, reason)


@dataclass(frozen=True)
class PhaseDiagram:
    sigma_grid: np.ndarray
    epsilon_grid: np.ndarray
    classification: np.ndarray  # (n_eps, n_sigma) of class names
    determinants: np.ndarray  # (n_eps, n_sigma, r); NaN for singular cells
    params: dict
    notes: dict = field(default_factory=dict)

    def counts(self) -> dict:
        return {c: int(np.sum(self.classification == c)) for c in CLASSES}

    def rows(self):
        """``(sigma, epsilon, class, D1..Dr)`` in epsilon-major, sigma-minor order."""
        for i, eps in enumerate(self.epsilon_grid):
            for j, sig in enumerate(self.sigma_grid):
                yield float(sig), float(eps), str(self.classification[i, j]), self.determinants[i, j]


def classify_cell(model: LogisticHopfModel, sigma: float, epsilon: float, tol: float = 1e-9):
    """Class name, unscaled determinants and an optional note for one grid cell."""
    p = model.params(sigma, epsilon)
    num = (1.0 + p.theta) ** 2
    if abs(p.denominator) <= 1e-12 * max(1.0, num):
        return "Singular", np.full(model.order, np.nan), "equilibrium at infinity"
    try:
        b = model.scaled_coefficients(sigma, epsilon)
        rep = routh_hurwitz(b, tol)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return "Singular", np.full(model.order, np.nan), str(exc)
    j = np.arange(1, model.order + 1)
    dets = rep.determinants * sigma ** (j * (j + 1) / 2)
    name = {Verdict.STABLE: "Stable", Verdict.UNSTABLE: "Unstable", Verdict.CRITICAL: "Critical"}[rep.verdict]
    return name, dets, None


def _row(args):
    model, sigmas, eps, tol = args
    return [classify_cell(model, s, eps, tol) for s in sigmas]


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("LCT_THREADS", "1") or 1)
    return max(1, int(threads))


def phase_diagram(
    model: LogisticHopfModel, sigma_grid, epsilon_grid, tol: float = 1e-9, threads: int | None = None
) -> PhaseDiagram:
    """Classify every ``(sigma, epsilon)`` cell; rows are evaluated in parallel when ``threads > 1``."""
    sig = np.asarray(sigma_grid, dtype=float)
    eps = np.asarray(epsilon_grid, dtype=float)
    if sig.size == 0 or eps.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(sig <= 0):
        raise ValueError("sigma grid must be positive")
    jobs = [(model, sig, e, tol) for e in eps]
    n = resolve_threads(threads)
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(_row, jobs))
    else:
        rows = [_row(j) for j in jobs]
    cls = np.empty((eps.size, sig.size), dtype=object)
    dets = np.empty((eps.size, sig.size, model.order))
    notes = {}
    for i, row in enumerate(rows):
        for j, (name, d, note) in enumerate(row):
            cls[i, j] = name
            dets[i, j] = d
            if note:
                notes[(float(sig[j]), float(eps[i]))] = note
    return PhaseDiagram(sig, eps, cls.astype(str), dets, {"r": model.r, "K": model.K, "Omega": model.Omega}, notes)
