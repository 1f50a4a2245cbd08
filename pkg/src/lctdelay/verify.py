"""Self-check suites run by ``lctdelay verify``.

Each check returns ``(name, passed, detail)``. Randomized checks draw from a
seeded generator so a given seed always reproduces the same verdicts.
"""

from __future__ import annotations

import math

import numpy as np

from .equilibria import find_equilibrium, logistic_equilibrium
from .kernels import KernelSpec, Oscillation
from .history import ConstantHistory
from .lct import DelaySystemSpec, augmented_dimension, transform
from .logistic import LogisticParams, logistic_jacobian, logistic_spec, canonical_order
from .stability import scaled_logistic_coefficients, char_poly, hurwitz_determinants, scaling_check

__all__ = ["SUITES", "run_suite", "printed_determinants"]


def printed_determinants(theta: float) -> np.ndarray:
    """Closed-form ``D_1 .. D_6`` of the scaled polynomial at ``eps = 0, mu0 = 2``."""
    t = theta
    return np.array(
        [
            6.0,
            4 * t + 68,
            8 * t**2 + 272 * t + 776,
            64 * t**3 + 1216 * t**2 + 6336 * t + 5184,
            128 * t**5 + 2688 * t**4 + 17664 * t**3 + 38144 * t**2 + 33408 * t + 10368,
            0.0,
        ]
    )


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def check_coefficients(rng) -> list:
    out = []
    for th in (0.0, 0.25, 0.64, 1.0, 2.0):
        dets = hurwitz_determinants(scaled_logistic_coefficients(th, 0.0, 2.0))
        ref = printed_determinants(th)
        scale = max(1.0, float(np.max(np.abs(dets))))
        err = max(_rel(dets[:5], ref[:5]), abs(dets[5]) / scale)
        out.append((f"determinants theta={th}", bool(err <= 1e-8), f"max rel err {err:.2e}"))
    worst = 0.0
    for _ in range(50):
        sigma = rng.uniform(0.2, 3.0)
        theta = rng.uniform(0.0, 3.0)
        eps = rng.uniform(-0.5, 1.5)
        mu0 = rng.uniform(0.2, 4.0)
        p = LogisticParams(mu0 * sigma, rng.uniform(0.5, 2.0), sigma, sigma * math.sqrt(theta), eps)
        if abs(p.denominator) < 1e-3:
            continue
        X = logistic_equilibrium(p.r, p.K, p.sigma, p.Omega, p.epsilon).state
        b = char_poly(logistic_jacobian(p, X)).coefficients / sigma ** np.arange(1, 8)
        worst = max(worst, _rel(b, scaled_logistic_coefficients(theta, eps, mu0)))
    out.append(("coefficients vs analytic Jacobian (50 draws)", worst <= 1e-8, f"max rel err {worst:.2e}"))
    return out


def check_scaling(rng) -> list:
    worst = 0.0
    for _ in range(100):
        b = rng.uniform(0.5, 5.0, 7)
        s = rng.choice([0.5, 2.0]) * rng.uniform(0.8, 1.2)
        lhs = hurwitz_determinants(scaling_check(s, b))
        j = np.arange(1, 8)
        rhs = s ** (j * (j + 1) / 2) * hurwitz_determinants(b)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-300))))
    return [("determinant scaling law (100 draws)", worst <= 1e-9, f"max rel err {worst:.2e}")]


def check_dimension(rng) -> list:
    ok = transform(logistic_spec(LogisticParams(2.0, 1.0, 1.0, 0.8, 0.5))).r == 7
    out = [("logistic r = 7", ok, "")]
    bad = 0
    for _ in range(200):
        D = int(rng.integers(1, 5))
        d = int(rng.integers(1, D + 1))
        N = int(rng.integers(1, 5))
        counts = [int(rng.integers(0, 3))]
        for _k in range(N - 1):
            counts.append(int(rng.integers(0, counts[-1] + 1)))
        sigma = float(rng.uniform(0.3, 3.0))
        omegas = rng.uniform(0.0, 2.0, max(counts) if max(counts) else 0)
        kernels = tuple(
            KernelSpec(k + 1, sigma, 1.0, tuple(Oscillation(0.1, 0.0, float(omegas[n])) for n in range(m)))
            for k, m in enumerate(counts)
        )
        spec = DelaySystemSpec(D, d, kernels, (1.0,) * N, lambda x, z: -x, ConstantHistory(np.zeros(D)))
        if transform(spec).r != augmented_dimension(D, d, counts) or spec.dimension != D + d * (N + 2 * sum(counts)):
            bad += 1
    out.append(("random specs match the dimension formula (200 draws)", bad == 0, f"{bad} mismatches"))
    return out


def check_equilibrium(rng) -> list:
    worst_res, worst_diff = 0.0, 0.0
    for sigma in np.linspace(0.2, 3.0, 20):
        for eps in np.linspace(0.0, 2.0, 20):
            p = LogisticParams(2.0, 1.0, float(sigma), 0.8, float(eps))
            closed = logistic_equilibrium(p.r, p.K, p.sigma, p.Omega, p.epsilon)
            spec = logistic_spec(p)
            gen = find_equilibrium(spec, [p.K])
            order = canonical_order(transform(spec))
            worst_res = max(worst_res, gen.residual, closed.residual)
            worst_diff = max(worst_diff, float(np.max(np.abs(gen.state[order] - closed.state))))
    return [
        ("equilibrium residuals on 20x20 grid", worst_res <= 1e-10, f"max {worst_res:.2e}"),
        ("closed form vs general construction", worst_diff <= 1e-10, f"max diff {worst_diff:.2e}"),
    ]


SUITES = {
    "appendix-b": check_coefficients,
    "scaling": check_scaling,
    "dimension": check_dimension,
    "equilibrium": check_equilibrium,
}


def run_suite(name: str, seed: int = 0) -> list:
    names = list(SUITES) if name == "all" else [name]
    results = []
    for n in names:
        if n not in SUITES:
            raise ValueError(f"unknown suite {n!r}; choose from {sorted(SUITES) + ['all']}")
        rng = np.random.default_rng(seed)
        results.extend((f"{n}: {label}", ok, detail) for label, ok, detail in SUITES[n](rng))
    return results
