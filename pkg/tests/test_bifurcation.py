import numpy as np
import pytest

from lctdelay.bifurcation import (
    BracketError,
    LogisticHopfModel,
    classify_cell,
    hopf_point_at,
    hopf_slope,
    phase_diagram,
    resolve_threads,
    trace_locus,
)
from lctdelay.stability import eigenvalues


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 4.0])
def test_eps_zero_hopf_point(r):
    model = LogisticHopfModel(r, 1.0, 0.8)
    pt = hopf_point_at(0.0, model, (0.05 * r, 3.0 * r))
    assert pt.sigma == pytest.approx(r / 2, abs=1e-9)
    assert pt.frequency == pytest.approx(r / 2, rel=1e-8)
    assert pt.transversality != 0


def test_hopf_point_properties():
    model = LogisticHopfModel(2.0, 1.0, 0.8)
    pt = hopf_point_at(0.4, model)
    assert np.all(model.scaled_determinants(pt.sigma, pt.epsilon)[:5] > 0)
    ev = eigenvalues(model.jacobian(pt.sigma, pt.epsilon))
    pair = ev[ev.imag > 0]
    assert np.min(np.abs(pair.real)) < 1e-8
    below, above = classify_cell(model, pt.sigma - 1e-3, 0.4)[0], classify_cell(model, pt.sigma + 1e-3, 0.4)[0]
    assert (below, above) == ("Unstable", "Stable")


def test_bracket_without_sign_change():
    model = LogisticHopfModel(2.0, 1.0, 0.8)
    with pytest.raises(BracketError):
        hopf_point_at(0.0, model, (1.5, 3.0))


def test_slope_matches_locus():
    model = LogisticHopfModel(2.0, 1.0, 0.8)
    slope = hopf_slope(model, 1.0)
    for eps in (1e-3, 2e-3):
        s = hopf_point_at(eps, model).sigma
        assert (s - 1.0) / eps == pytest.approx(slope, abs=5e-2 * abs(slope) + 1e3 * eps)


def test_trace_locus_structure():
    model = LogisticHopfModel(2.0, 1.0, 0.8)
    locus = trace_locus(model, (0.0, 0.5), 10)
    assert locus.points[0].sigma == pytest.approx(1.0, abs=1e-8)
    assert locus.epsilons[-1] == pytest.approx(0.5)
    assert np.all(np.diff(locus.epsilons) > 0)
    assert all(classify_cell(model, p.sigma, p.epsilon)[0] == "Critical" for p in locus.points)


def test_phase_diagram_small_grid_and_threads():
    model = LogisticHopfModel(2.0, 1.0, 0.8)
    sig = np.linspace(0.2, 2.0, 7)
    eps = np.linspace(0.0, 1.0, 4)
    one = phase_diagram(model, sig, eps, threads=1)
    two = phase_diagram(model, sig, eps, threads=2)
    assert np.array_equal(one.classification, two.classification)
    assert one.classification.shape == (4, 7)
    assert sum(one.counts().values()) == 28
    rows = list(one.rows())
    assert rows[0][:2] == (0.2, 0.0) and len(rows[0][3]) == 7
    with pytest.raises(ValueError):
        phase_diagram(model, [0.0, 1.0], eps)


def test_singular_cell():
    model = LogisticHopfModel(2.0, 1.0, 3**0.5)
    assert classify_cell(model, 1.0, 8.0)[0] == "Singular"


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("LCT_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(2) == 2
    monkeypatch.delenv("LCT_THREADS")
    assert resolve_threads() == 1


def test_reference_cells():
    model = LogisticHopfModel(2.0, 1.0, 0.8)
    assert classify_cell(model, 2.0, 0.0)[0] == "Stable"
    assert classify_cell(model, 0.5, 0.0)[0] == "Unstable"


def test_zero_width_range():
    model = LogisticHopfModel(2.0, 1.0, 0.8)
    locus = trace_locus(model, (0.3, 0.3), 10)
    assert len(locus.points) == 1
    assert locus.points[0].sigma == pytest.approx(hopf_point_at(0.3, model).sigma, abs=1e-9)


def test_locus_regression_anchors():
    model = LogisticHopfModel(2.0, 1.0, 0.8)
    locus = trace_locus(model, (0.0, 2.0), 100)
    sig = dict(zip(np.round(locus.epsilons, 6), locus.sigmas))
    assert sig[0.0] == pytest.approx(1.0, abs=1e-8)
    assert sig[0.3] == pytest.approx(0.4909659, abs=1e-6)
    assert sig[0.6] == pytest.approx(0.4423634, abs=1e-6)
    assert "epsilon=1.21" in locus.stop_reason
