"""Random small delay systems shared by several test modules."""

import numpy as np

from lctdelay.history import ConstantHistory, ExponentialHistory, parse_history
from lctdelay.kernels import KernelSpec, Oscillation
from lctdelay.lct import DelaySystemSpec


def smooth_rhs(A, B):
    """Bounded-smooth ``F(x, z) = A tanh(x) + B tanh(z) - x``."""

    def F(x, z):
        return A @ np.tanh(x) + B @ np.tanh(z) - x

    return F


def random_history(rng, D):
    kind = rng.integers(0, 3)
    if kind == 0:
        return ConstantHistory(rng.uniform(-1, 1, D))
    if kind == 1:
        return ExponentialHistory(rng.uniform(-1, 1, D), float(rng.uniform(0.1, 1.0)))
    return parse_history("expr:damped_cos", D)


def random_kernels(rng, sigma, N, counts, omegas):
    kernels = []
    for k in range(N):
        oscs = tuple(
            Oscillation(float(rng.uniform(-0.5, 0.5)), float(rng.uniform(-0.5, 0.5)), float(omegas[n]))
            for n in range(counts[k])
        )
        kernels.append(KernelSpec(k + 1, sigma, float(rng.uniform(0.5, 1.5)), oscs))
    return tuple(kernels)


def random_small_spec(rng, history=None):
    """D <= 2, N <= 2, M_k <= 1 with a bounded, smooth right-hand side."""
    D = int(rng.integers(1, 3))
    d = int(rng.integers(1, D + 1))
    N = int(rng.integers(1, 3))
    m1 = int(rng.integers(0, 2))
    counts = [m1] + [int(rng.integers(0, m1 + 1)) for _ in range(N - 1)]
    sigma = float(rng.uniform(0.5, 2.0))
    omegas = rng.uniform(0.2, 2.0, 1)
    kernels = random_kernels(rng, sigma, N, counts, omegas)
    weights = tuple(float(w) for w in rng.uniform(-1, 1, N))
    A = rng.uniform(-0.5, 0.5, (D, D))
    B = rng.uniform(-1.0, 1.0, (D, D))
    hist = history if history is not None else random_history(rng, D)
    return DelaySystemSpec(D, d, kernels, weights, smooth_rhs(A, B), hist, "smooth")


def perturb_kernels(rng, spec, size=0.2):
    """Same chain structure and frequencies, jittered amplitudes and sigma."""
    sigma = spec.sigma * float(rng.uniform(1 - size, 1 + size))
    out = []
    for ker in spec.kernels:
        oscs = tuple(
            Oscillation(o.eps + float(rng.uniform(-size, size)), o.mu + float(rng.uniform(-size, size)), o.omega)
            for o in ker.oscillations
        )
        out.append(KernelSpec(ker.order, sigma, ker.a + float(rng.uniform(-size, size)), oscs))
    return spec.with_kernels(out)
