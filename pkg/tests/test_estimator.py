import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from znfc.estimator import ZNFCMemory
from znfc.metrics import gaussian_input


def _batch(model, n=2):
    wf = gaussian_input(1.41, 0.0, (-3.8, 24.4, model.dt_))
    return np.vstack([wf.samples * (k + 1) for k in range(n)])


def test_fit_transform_is_linear():
    m = ZNFCMemory(t_start=-3.8).fit()
    X = _batch(m)
    Y = m.fit(X).transform(X)
    assert Y.shape == X.shape
    assert np.allclose(Y[1], 2 * Y[0], rtol=1e-12, atol=0)
    assert m.T0_ == pytest.approx(11.499, abs=1e-3)


def test_score_is_echo_efficiency():
    m = ZNFCMemory(t_start=-3.8).fit()
    assert m.score(_batch(m, 1)) == pytest.approx(0.0174, abs=1e-3)


def test_unfitted_and_bad_input():
    m = ZNFCMemory()
    with pytest.raises(NotFittedError):
        m.transform(np.ones((1, 10)))
    m.fit(np.ones((1, 10)))
    with pytest.raises(ValueError):
        m.transform(np.ones((1, 11)))
    with pytest.raises(ValueError):
        m.transform(np.full((1, 10), np.nan))


def test_clone_and_params():
    m = ZNFCMemory(B=0.05, switch_time=2.0)
    c = clone(m)
    assert c.get_params()["B"] == 0.05 and c.get_params()["switch_time"] == 2.0
    c.set_params(L=1.0)
    assert c.L == 1.0


def test_in_pipeline():
    m = ZNFCMemory(t_start=-3.8).fit()
    X = _batch(m, 1)
    pipe = make_pipeline(ZNFCMemory(t_start=-3.8), FunctionTransformer(np.abs))
    out = pipe.fit_transform(X)
    assert out.dtype.kind == "f" and out.shape == X.shape
