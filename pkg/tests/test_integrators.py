import math

import numpy as np
import pytest

from _specs import perturb_kernels, random_small_spec
from lctdelay.history import ConstantHistory, ExponentialHistory, parse_history
from lctdelay.integrators import (
    StepUnderflowError,
    continuity_gap,
    history_term,
    integrate_direct,
    integrate_ode,
)
from lctdelay.kernels import KernelSpec
from lctdelay.lct import AugmentedSystem, Block, DelaySystemSpec, transform
from lctdelay.logistic import LogisticParams, logistic_spec


def linear_system(A, X0):
    n = len(X0)
    layout = tuple(Block(f"y{i}", "x", None, None, i, i + 1) for i in range(n))
    return AugmentedSystem(None, layout, np.asarray(X0, float), lambda X: A @ X)


def test_rk4_fourth_order():
    A = np.array([[0.0, 1.0], [-1.0, -0.1]])
    sys_ = linear_system(A, [1.0, 0.0])
    w = math.sqrt(1 - 0.0025)
    exact = math.exp(-0.05 * 5) * (math.cos(w * 5) + 0.05 / w * math.sin(w * 5))
    errs = [abs(integrate_ode(sys_, 5.0, "rk4", h).states[-1, 0] - exact) for h in (0.1, 0.05)]
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)


def test_rk45_tolerance():
    sys_ = linear_system(np.array([[-2.0]]), [1.0])
    tr = integrate_ode(sys_, 3.0, "rk45", rtol=1e-10, atol=1e-14)
    assert tr.times[-1] == pytest.approx(3.0)
    assert tr.states[-1, 0] == pytest.approx(math.exp(-6.0), rel=1e-8)


def test_blowup_flag():
    sys_ = linear_system(np.array([[0.0]]), [1.0])
    sys_ = AugmentedSystem(None, sys_.layout, np.array([1.0]), lambda X: X**2)
    tr = integrate_ode(sys_, 2.0, "rk4", 1e-3)
    assert tr.blowup and tr.times[-1] < 1.01


def test_bad_arguments():
    sys_ = linear_system(np.array([[-1.0]]), [1.0])
    with pytest.raises(ValueError):
        integrate_ode(sys_, -1.0)
    with pytest.raises(ValueError):
        integrate_ode(sys_, 1.0, "euler")
    with pytest.raises(ValueError):
        integrate_ode(sys_, 1.0, X0=[np.nan])


def test_step_underflow():
    sys_ = AugmentedSystem(None, linear_system(np.eye(1), [1.0]).layout, np.array([1.0]), lambda X: 1.0 / (1.0 - X))
    with pytest.raises((StepUnderflowError, FloatingPointError)):
        integrate_ode(sys_, 1.0, "rk45", X0=[0.0])


@pytest.mark.parametrize("hist", ["constant:[0.7]", "exp:0.5:[1.0]", "expr:damped_cos"])
def test_history_term_closed_forms_agree_with_quadrature(hist):
    # for t > 0: int_t^inf A(s) u(t - s) ds; compare against brute-force quadrature
    spec = logistic_spec(LogisticParams(2.0, 1.0, 1.0, 0.8, 0.5), parse_history(hist, 1))
    times = np.array([0.0, 0.3, 1.7])
    got = history_term(spec, times)
    s = np.linspace(0, 80, 400001)
    for t, val in zip(times, got):
        f = spec.delay_kernel(t + s) * spec.history(-s)[:, 0]
        ref = np.sum((f[1:] + f[:-1]) * 0.5) * (s[1] - s[0])
        assert float(np.ravel(val)[0]) == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("hist", ["constant:[1.05]", "exp:0.5:[1.0]", "expr:damped_cos"])
def test_direct_matches_lct(hist):
    spec = logistic_spec(LogisticParams(2.0, 1.0, 1.0, 0.8, 0.5), parse_history(hist, 1))
    a = integrate_direct(spec, 5.0, 2e-3)
    b = integrate_ode(transform(spec), 5.0, "rk4", 2e-3)
    assert np.max(np.abs(a.states[:, 0] - b.states[:, 0])) < 1e-8


def test_direct_converges_fourth_order():
    spec = logistic_spec(LogisticParams(2.0, 1.0, 1.0, 0.8, 0.5), ConstantHistory([1.2]))
    ref = integrate_ode(transform(spec), 4.0, "rk4", 5e-4).states[-1, 0]
    e1 = abs(integrate_direct(spec, 4.0, 0.02).states[-1, 0] - ref)
    e2 = abs(integrate_direct(spec, 4.0, 0.01).states[-1, 0] - ref)
    assert e1 / e2 > 10


def test_direct_rejects_coarse_step():
    spec = logistic_spec(LogisticParams(2.0, 1.0, 1.0, 8.0, 0.5))
    with pytest.raises(ValueError, match="too large"):
        integrate_direct(spec, 1.0, 0.1)


def test_continuity_identical_and_perturbed():
    rng = np.random.default_rng(21)
    for _ in range(5):
        s1 = random_small_spec(rng)
        same = continuity_gap(s1, s1, 5.0)
        assert same.delta_T == 0.0 and same.bound == 0.0 and same.satisfied
        cert = continuity_gap(s1, perturb_kernels(rng, s1), 5.0)
        assert cert.satisfied and cert.delta_T > 0 and cert.kernel_distance > 0
        assert set(cert.to_dict()) >= {"delta_T", "bound", "L", "Omega_N", "satisfied"}


def test_continuity_requires_matching_specs():
    p = LogisticParams(2.0, 1.0, 1.0, 0.8, 0.5)
    s1 = logistic_spec(p)
    with pytest.raises(ValueError, match="history"):
        continuity_gap(s1, s1.with_history(ConstantHistory([2.0])), 1.0)
    other = DelaySystemSpec(1, 1, s1.kernels, s1.weights, lambda x, z: -x, s1.history)
    with pytest.raises(ValueError, match="right-hand side"):
        continuity_gap(s1, other, 1.0)
    with pytest.raises(ValueError):
        continuity_gap(s1, s1.with_kernels([KernelSpec(1, 1.0)]), 1.0)


def test_logistic_kernel_perturbation_certificate():
    p = LogisticParams(2.0, 1.0, 1.0, 0.8, 0.5)
    s1 = logistic_spec(p)
    s2 = logistic_spec(p.with_(epsilon=0.55), s1.history)
    cert = continuity_gap(s1, s2, 10.0)
    assert cert.satisfied and 0 < cert.delta_T < cert.bound


def test_exponential_history_divergence():
    from lctdelay.history import HistoryDivergenceError

    spec = logistic_spec(LogisticParams(2.0, 1.0, 1.0), ExponentialHistory([1.0], -2.0))
    with pytest.raises(HistoryDivergenceError):
        transform(spec)


def test_equilibrium_start_stays_put():
    from lctdelay.equilibria import logistic_equilibrium
    from lctdelay.logistic import logistic_system

    p = LogisticParams(2.0, 1.0, 1.4, 0.8, 0.3)
    e = logistic_equilibrium(p.r, p.K, p.sigma, p.Omega, p.epsilon)
    tr = integrate_ode(logistic_system(p, e.state), 100.0, "rk4")
    assert np.max(np.abs(tr.states - e.state)) < 1e-10


def test_exponential_decay():
    sys_ = linear_system(np.array([[-1.0]]), [1.0])
    assert integrate_ode(sys_, 1.0, "rk4", 1e-3).states[-1, 0] == pytest.approx(math.exp(-1), abs=1e-8)


def test_stable_cell_envelope_decreases():
    from lctdelay.equilibria import logistic_equilibrium
    from lctdelay.logistic import logistic_system

    p = LogisticParams(2.0, 1.0, 2.0, 0.8, 0.1)
    e = logistic_equilibrium(p.r, p.K, p.sigma, p.Omega, p.epsilon)
    X0 = e.state.copy()
    X0[0] += 0.05
    dev = np.abs(integrate_ode(logistic_system(p, X0), 40.0).states[:, 0] - e.x_e[0])
    n = dev.size // 4
    assert dev[-n:].max() < dev[n : 2 * n].max() < dev[:n].max()


def test_zero_weights_reduce_to_ode():
    spec = DelaySystemSpec(1, 1, (KernelSpec(1, 1.0),), (0.0,), lambda x, z: -x, ConstantHistory([1.0]))
    a = integrate_direct(spec, 2.0, 1e-2)
    assert np.allclose(a.states[:, 0], np.exp(-a.times), atol=1e-8)


def test_constant_history_at_equilibrium():
    from lctdelay.equilibria import logistic_equilibrium

    p = LogisticParams(2.0, 1.0, 1.0, 0.8, 0.5)
    xe = logistic_equilibrium(p.r, p.K, p.sigma, p.Omega, p.epsilon).x_e
    drift = []
    for h in (2e-2, 1e-2):
        tr = integrate_direct(logistic_spec(p, ConstantHistory(xe)), 10.0, h)
        drift.append(np.max(np.abs(tr.states[:, 0] - xe[0])))
    # any departure is discretization error of a fourth order scheme
    assert drift[1] < 1e-8
    assert drift[0] / drift[1] > 12


def test_far_kernels_loose_bound():
    k1 = (KernelSpec(1, 1.0),)
    k5 = (KernelSpec(1, 5.0),)
    s1 = DelaySystemSpec(1, 1, k1, (1.0,), lambda x, z: -x + np.tanh(z), ConstantHistory([1.0]))
    cert = continuity_gap(s1, s1.with_kernels(k5), 5.0)
    assert cert.satisfied and cert.bound > 10 * cert.delta_T
