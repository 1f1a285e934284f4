import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from fractalclass.cascade import CascadeParams, generate_cascade
from fractalclass.features import FEATURE_NAMES, FeatureVector, extract_features
from fractalclass.fileio import read_feature_csv, write_feature_csv
from fractalclass.mfdfa import DEFAULT_Q, MfdfaResult, estimate_hurst, mfdfa


def flat_result(h, q=DEFAULT_Q):
    q = np.array(q)
    return MfdfaResult(q=q, h=np.full(q.size, h), r2=np.ones(q.size), tau=np.arange(8.0),
                       fq=np.ones((q.size, 8)))


def test_constant_series():
    f = extract_features(np.full(64, 0.25), flat_result(0.5))
    assert (f.std, f.max, f.median, f.h_std, f.delta_h) == (0.0, 0.25, 0.25, 0.0, 0.0)


def test_small_series_statistics():
    f = extract_features([1.0, 2.0, 3.0, 4.0], flat_result(0.7))
    assert f.max == 4.0
    assert f.median == 2.5
    assert f.std == pytest.approx(np.sqrt(5 / 3), rel=1e-15)


def test_monofractal_h_features():
    f = extract_features(np.arange(10.0), flat_result(0.8))
    assert f.h_mean == pytest.approx(0.8) and f.h_std == 0.0
    assert f.h1 == f.h2 == 0.8 and f.delta_h == 0.0


def test_features_from_real_analysis():
    x = generate_cascade(CascadeParams(10, 0.7, seed=3))
    res = mfdfa(x)
    f = extract_features(x, res)
    assert f.h2 == estimate_hurst(x)
    assert f.delta_h == res.at(0.1) - res.at(5.0)
    assert f.h_mean == pytest.approx(np.mean(res.h))
    assert f.h_std == pytest.approx(np.std(res.h, ddof=1))
    v = f.to_array()
    assert v.shape == (8,) and np.all(np.isfinite(v))
    assert f.std >= 0 and f.h_std >= 0


def test_missing_required_q_rejected():
    with pytest.raises(ValueError):
        extract_features(np.arange(10.0), flat_result(0.6, q=(0.5, 1.0, 2.0, 5.0)))


@given(hnp.arrays(float, st.integers(2, 50), elements=st.floats(-1e3, 1e3)), st.randoms())
def test_order_statistics_are_permutation_invariant(x, rnd):
    perm = x.copy()
    rnd.shuffle(perm)
    a = extract_features(x, flat_result(0.6))
    b = extract_features(perm, flat_result(0.6))
    assert (a.max, a.median) == (b.max, b.median)
    assert a.std == pytest.approx(b.std, rel=1e-12, abs=1e-12)


def test_feature_order_and_csv_round_trip(tmp_path):
    assert FEATURE_NAMES == ("std", "max", "median", "h_mean", "h_std", "h1", "h2", "delta_h")
    rows = [extract_features(generate_cascade(CascadeParams(9, a, seed=1)),
                             mfdfa(generate_cascade(CascadeParams(9, a, seed=1)))).to_array()
            for a in (0.2, 2.0)]
    write_feature_csv(tmp_path / "f.csv", rows, [0, None])
    header = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert header == "std,max,median,h_mean,h_std,h1,h2,delta_h,class_index"
    X, y = read_feature_csv(tmp_path / "f.csv")
    assert X.tobytes() == np.array(rows).tobytes()
    assert y == [0, None]
    assert FeatureVector.from_array(X[0]).to_array().tobytes() == rows[0].tobytes()
