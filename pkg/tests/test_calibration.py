import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractalclass.calibration import (CalibrationEntry, CalibrationTable, DegenerateCalibrationWarning,
                                      build_calibration, class_masses, classify_by_interval,
                                      confidence_interval, normal_quantile)
from fractalclass.classes import HurstClassScheme, eleven_class_scheme, two_class_scheme


def table_with(n=512, delta=-0.02, s=0.05):
    return CalibrationTable({n: CalibrationEntry(delta, s, 200, (0.6,))}, "test")


def test_normal_quantile():
    assert normal_quantile(0.05) == pytest.approx(1.959964, abs=1e-6)


def test_interval_arithmetic_example():
    ci = confidence_interval(0.8, 512, 0.05, table_with())
    assert ci.center == pytest.approx(0.78)
    assert ci.lower == pytest.approx(0.682, abs=5e-4)
    assert ci.upper == pytest.approx(0.878, abs=5e-4)
    assert ci.lower < ci.center < ci.upper


def test_zero_spread_collapses_interval():
    ci = confidence_interval(0.8, 512, 0.05, table_with(s=0.0))
    assert ci.lower == ci.center == ci.upper


def test_missing_length_is_an_error():
    with pytest.raises(KeyError):
        confidence_interval(0.8, 1024, 0.05, table_with())


@pytest.mark.parametrize("a", [0.0, 1.0, -0.1])
def test_alpha_level_range(a):
    with pytest.raises(ValueError):
        confidence_interval(0.8, 512, a, table_with())


def test_half_width_grows_as_alpha_shrinks():
    widths = [confidence_interval(0.7, 512, a, table_with()).upper for a in (0.5, 0.2, 0.1, 0.05, 0.01)]
    assert all(b > a for a, b in zip(widths, widths[1:]))


def test_perfect_estimator_is_degenerate():
    with pytest.warns(DegenerateCalibrationWarning):
        t = build_calibration([64], h_grid=(0.6, 0.8), trials_per_cell=100, seed=0,
                              estimator=lambda series, h: h)
    e = t.lookup(64)
    assert e.delta == 0.0 and e.s == 0.0 and e.degenerate


def test_build_rejects_bad_input():
    with pytest.raises(ValueError):
        build_calibration([500], trials_per_cell=100)
    with pytest.raises(ValueError):
        build_calibration([512], h_grid=(), trials_per_cell=100)
    with pytest.raises(ValueError):
        build_calibration([512], trials_per_cell=10)


@pytest.fixture(scope="module")
def tables():
    return (build_calibration([512, 4096], trials_per_cell=100, seed=1),
            build_calibration([512, 4096], trials_per_cell=100, seed=2))


@pytest.mark.slow
def test_spread_shrinks_with_length(tables):
    t, _ = tables
    assert t.lookup(512).s > t.lookup(4096).s > 0
    assert t.lookup(512).trials == 1000


@pytest.mark.slow
def test_bias_stable_across_seeds(tables):
    a, b = tables
    for n in (512, 4096):
        ea, eb = a.lookup(n), b.lookup(n)
        assert abs(ea.delta - eb.delta) < 3 * ea.s / math.sqrt(ea.trials)


def test_table_json_round_trip(tmp_path):
    t = build_calibration([64], h_grid=(0.6, 0.8), trials_per_cell=100, seed=4)
    t.save(tmp_path / "cal.json")
    back = CalibrationTable.load(tmp_path / "cal.json")
    assert back.to_dict() == t.to_dict()
    assert back.to_dict()["entries"][0]["N"] == 64


def test_boundary_center_splits_evenly():
    scheme = HurstClassScheme.from_edges([0.5, 0.6, 0.7])
    r = classify_by_interval(0.6, 512, 0.05, table_with(delta=0.0, s=0.03), scheme)
    assert r.probabilities[0] == pytest.approx(r.probabilities[1], abs=1e-12)
    assert r.predicted == 0  # tie goes to the lower index


def test_concentrated_mass_in_one_class():
    r = classify_by_interval(0.75, 512, 0.05, table_with(delta=0.0, s=1e-4), eleven_class_scheme())
    assert r.predicted == 5
    assert r.score(5) == pytest.approx(1.0, abs=1e-12)


@given(h=st.floats(0.0, 1.5), s=st.floats(1e-4, 1.0), delta=st.floats(-0.1, 0.1))
def test_masses_and_tails_sum_to_one(h, s, delta):
    for scheme in (eleven_class_scheme(), two_class_scheme()):
        r = classify_by_interval(h, 512, 0.05, table_with(delta=delta, s=s), scheme)
        assert abs(r.probabilities.sum() + r.below + r.above - 1.0) < 1e-9
        assert np.all(r.probabilities >= 0)


@pytest.mark.parametrize("h", [0.3, 0.6, 0.99, 1.2])
def test_zero_spread_masses_sum_to_one(h):
    probs, below, above = class_masses(h, 0.0, two_class_scheme())
    assert probs.sum() + below + above == 1.0


@given(h=st.floats(0.4, 1.1), shift=st.floats(-0.3, 0.3))
def test_translation_equivariance(h, shift):
    table = table_with(delta=-0.01, s=0.07)
    scheme = eleven_class_scheme()
    a = classify_by_interval(h, 512, 0.05, table, scheme).probabilities
    b = classify_by_interval(h + shift, 512, 0.05, table, scheme.shifted(shift)).probabilities
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_overlapping_scheme_rejected():
    with pytest.raises(ValueError):
        HurstClassScheme(((0.5, 0.7), (0.65, 0.9)))
