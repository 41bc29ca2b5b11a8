# -*- coding: utf-8 -*-

import math

import numpy as np

from ..errors import DimensionError, SurrogateError
from ..surrogate import SurrogateModel


def _linear(X):
    A = np.array([[0.5, 0.1], [-0.2, 0.3]])
    return X @ A.T + np.array([0.1, 0.2])


def _samples():
    rng = np.random.default_rng(5)
    return rng.random((12, 2))


def test_interpolates_samples():
    X = _samples()
    Y = np.sin(3.0 * X)
    model = SurrogateModel(X, Y)
    assert len(model) == 12
    assert np.allclose(model.predict(X), Y, atol=1e-8)
    assert model.predict(X[0]).shape == (2,)
    assert model.bandwidth > 0.0


def test_reproduces_linear_maps():
    X = _samples()
    model = SurrogateModel(X, _linear(X))
    queries = np.array([[0.33, 0.71], [0.9, 0.05]])
    assert np.allclose(model.predict(queries), _linear(queries), atol=1e-6)


def test_uncertainty():
    X = _samples()
    model = SurrogateModel(X, _linear(X))
    assert np.allclose(model.uncertainty(X), 0.0)
    assert model.uncertainty(np.array([3.0, 3.0])) > 0.0
    assert math.isclose(model.nearest_distance(X[3]), 0.0, abs_tol=1e-12)
    near, far = model.uncertainty(np.array([[0.5, 0.5], [5.0, 5.0]]))
    assert far > near


def test_empty_and_growing_model():
    model = SurrogateModel.empty(2, 1)
    assert model.is_empty
    assert model.nearest_distance(np.zeros(2)) == math.inf
    for method in (model.predict, model.uncertainty):
        try:
            method(np.zeros(2))
        except SurrogateError:
            pass
        else:
            assert False, "an empty surrogate cannot predict"
    one = model.add([0.2, 0.4], [1.5])
    assert len(one) == 1 and model.is_empty
    assert np.allclose(one.predict(np.array([0.9, 0.9])), [1.5])
    two = one.add([0.8, 0.1], [2.5])
    assert len(two) == 2
    assert len(two.samples) == 2


def test_duplicate_inputs_are_repaired():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    Y = _linear(X)
    model = SurrogateModel(X, Y)
    assert len(model) == 5
    assert np.all(np.isfinite(model.predict(np.array([[0.5, 0.5], [0.25, 0.75]]))))


def test_validation():
    try:
        SurrogateModel(np.zeros((3, 2)), np.zeros((2, 1)))
    except DimensionError:
        pass
    else:
        assert False, "input and output counts must agree"
    try:
        SurrogateModel(_samples(), _samples(), bandwidth=-1.0)
    except ValueError:
        pass
    else:
        assert False, "bandwidth must be positive"


def runtests():
    test_interpolates_samples()
    test_reproduces_linear_maps()
    test_uncertainty()
    test_empty_and_growing_model()
    test_duplicate_inputs_are_repaired()
    test_validation()

if __name__ == '__main__':
    runtests()
