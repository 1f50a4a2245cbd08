import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _specs import random_small_spec
from lctdelay.equilibria import (
    ConvergenceError,
    EquilibriumAtInfinity,
    SingularJacobianError,
    assemble_state,
    delta,
    delta_sequence,
    effective_gain,
    find_equilibrium,
    logistic_equilibrium,
)
from lctdelay.history import ConstantHistory
from lctdelay.kernels import KernelSpec, Oscillation, erlang_tail_transform
from lctdelay.lct import DelaySystemSpec, transform
from lctdelay.logistic import LogisticParams, logistic_spec, canonical_order


def test_delta_is_erlang_fourier_transform():
    for k in (1, 2, 4):
        assert delta(k, 1.3, 0.6) == pytest.approx(complex(erlang_tail_transform(k, 1.3, -0.6j)), rel=1e-14)
    seq = delta_sequence(2.0, [[0.5, 1.0], [0.5]])
    assert len(seq) == 3 and seq[(2, 1)] == pytest.approx(delta(2, 2.0, 0.5))
    assert seq.max_modulus() <= 1.0
    with pytest.raises(ValueError):
        delta_sequence(0.0, [[1.0]])


def test_logistic_closed_form_reference_value():
    e = logistic_equilibrium(2.0, 1.0, 1.0, 0.8, 0.5)
    th = 0.64
    assert e.x_e[0] == pytest.approx((1 + th) ** 2 / ((1 + th) ** 2 - 0.5 * (th - 1)), rel=1e-15)
    assert e.x_e[0] == pytest.approx(0.93727348759409, rel=1e-12)
    assert e.residual < 1e-14


def test_logistic_eps_zero_is_carrying_capacity():
    e = logistic_equilibrium(1.5, 2.5, 0.9, 0.8, 0.0)
    assert e.x_e[0] == pytest.approx(2.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_general_construction_matches_closed_form(sigma, Omega, eps):
    p = LogisticParams(2.0, 1.0, sigma, Omega, eps)
    if abs(p.denominator) < 1e-3:
        return
    closed = logistic_equilibrium(p.r, p.K, p.sigma, p.Omega, p.epsilon)
    spec = logistic_spec(p)
    general = find_equilibrium(spec, [p.K])
    assert general.residual <= 1e-10
    scale = max(1.0, abs(closed.x_e[0]))
    assert np.allclose(general.state[canonical_order(transform(spec))], closed.state, atol=1e-10 * scale)


def test_equilibrium_at_infinity():
    # theta = 3, eps = (1+theta)^2/(theta-1) = 8 makes the denominator vanish
    with pytest.raises(EquilibriumAtInfinity):
        logistic_equilibrium(2.0, 1.0, 1.0, 3**0.5, 8.0)


def test_random_specs_residual():
    rng = np.random.default_rng(11)
    for _ in range(20):
        spec = random_small_spec(rng)
        e = find_equilibrium(spec, np.zeros(spec.D))
        layout_G = transform(spec).rhs
        assert np.max(np.abs(layout_G(e.state))) <= 1e-10
        assert np.allclose(assemble_state(spec, e.x_e), e.state)


def test_effective_gain():
    k1 = KernelSpec(1, 2.0, 0.5, (Oscillation(0.3, 0.2, 1.0),))
    spec = DelaySystemSpec(1, 1, (k1,), (2.0,), lambda x, z: z - x, ConstantHistory([0.0]))
    dl = delta(1, 2.0, 1.0)
    assert effective_gain(spec) == pytest.approx(2.0 * (0.5 + 0.3 * dl.real + 0.2 * dl.imag))


def test_singular_newton_system():
    spec = DelaySystemSpec(1, 1, (KernelSpec(1, 1.0),), (1.0,), lambda x, z: x - z + 1.0, ConstantHistory([0.0]))
    with pytest.raises(SingularJacobianError):
        find_equilibrium(spec, [1.0])


def test_no_root_fails_to_converge():
    spec = DelaySystemSpec(
        1, 1, (KernelSpec(1, 1.0),), (1.0,), lambda x, z: np.exp(x) + 0.0 * z, ConstantHistory([0.0])
    )
    with pytest.raises(ConvergenceError):
        find_equilibrium(spec, [0.0], max_iter=20)


def test_delta_examples():
    assert delta(3, 1.7, 0.0) == 1.0
    assert delta(1, 1.0, 1.0) == pytest.approx((1 + 1j) / 2, rel=1e-15)
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert abs(delta(int(rng.integers(1, 6)), rng.uniform(0.1, 5), rng.uniform(-5, 5))) <= 1.0


def test_gain_examples():
    k1 = KernelSpec(1, 1.0, 0.25)
    k2 = KernelSpec(2, 1.0, 1.0)
    spec = DelaySystemSpec(1, 1, (k1, k2), (2.0, 0.5), lambda x, z: z - x, ConstantHistory([0.0]))
    assert effective_gain(spec) == pytest.approx(1.0)
    p = LogisticParams(2.0, 1.0, 1.0, 0.8, 0.5)
    assert effective_gain(logistic_spec(p)) == pytest.approx(1 + 0.5 * (1 / (1 - 0.8j) ** 2).real, rel=1e-14)
    assert effective_gain(logistic_spec(p.with_(Omega=1e9))) == pytest.approx(1.0, abs=1e-9)


def test_logistic_examples():
    K, sigma, Om = 1.3, 1.0, 0.8
    th = (Om / sigma) ** 2
    e = logistic_equilibrium(2.0, K, sigma, Om, 0.0)
    s = th**0.5
    expected = [K, K, K, K / (1 + th), s * K / (1 + th), (1 - th) * K / (1 + th) ** 2, 2 * s * K / (1 + th) ** 2]
    assert np.allclose(e.state, expected, rtol=1e-15)
    assert logistic_equilibrium(2.0, K, 0.8, 0.8, 1.7).x_e[0] == pytest.approx(K)
    assert logistic_equilibrium(2.0, 1.0, 1.0, 0.8, 0.5).x_e[0] == pytest.approx(2.6896 / 2.8696, rel=1e-15)


def test_limits_are_continuous():
    xs = [logistic_equilibrium(2.0, 1.0, 1.0, 0.8, e).x_e[0] for e in (1e-3, 1e-6)]
    assert abs(xs[1] - 1.0) < abs(xs[0] - 1.0) < 1e-2
    xs = [logistic_equilibrium(2.0, 1.0, 1.0, w, 0.5).x_e[0] for w in (1.0 - 1e-3, 1.0 - 1e-6)]
    assert abs(xs[1] - 1.0) < abs(xs[0] - 1.0) < 1e-2


def test_zero_field_returns_guess():
    spec = DelaySystemSpec(1, 1, (KernelSpec(1, 1.0),), (1.0,), lambda x, z: 0.0 * x, ConstantHistory([0.0]))
    e = find_equilibrium(spec, [0.37])
    assert e.x_e[0] == 0.37 and e.residual == 0.0
