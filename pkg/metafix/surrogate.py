# -*- coding: utf-8; -*-
"""Interpolating kernel surrogate with a distance-based uncertainty estimate.

`SurrogateModel` interpolates stored `(input, output)` samples with an
inverse-multiquadric radial basis function (plus a low-degree polynomial
tail, so affine maps are reproduced exactly). The uncertainty at a query
point is the distance to the nearest sample, scaled by how fast the outputs
vary around that sample; it is zero at the samples.

The model is immutable; `add` returns a new model.
"""

__all__ = ["SurrogateModel"]

import logging

import numpy as np
from scipy.interpolate import RBFInterpolator
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .errors import DimensionError, SurrogateError
from .utils import make_rng

logger = logging.getLogger(__name__)

_DUPLICATE_TOL = 1e-12
_JITTER_ROUNDS = 4
_NEIGHBORS = 5
_MIN_VARIATION = 1e-6


class SurrogateModel:
    """Interpolating surrogate `f_hat` of a vector-valued map.

    `inputs`: array of shape `(k, d)`; `outputs`: array of shape `(k, m)`.
    An empty model (`k = 0`) is allowed; it cannot predict, see `is_empty`.

    `bandwidth` defaults to the median pairwise distance between the inputs.
    The RBF shape parameter is `1 / bandwidth`.

    Duplicate inputs make the interpolation system singular. They are repaired
    by a small deterministic jitter; if the fit still fails, raises `SurrogateError`.
    """
    def __init__(self, inputs, outputs, bandwidth=None):
        X = np.asarray(inputs, dtype=float)
        Y = np.asarray(outputs, dtype=float)
        if X.ndim == 1:
            X = X.reshape(len(X), -1) if len(X) else X.reshape(0, 1)
        if Y.ndim == 1:
            Y = Y.reshape(len(Y), -1) if len(Y) else Y.reshape(0, 1)
        if len(X) != len(Y):
            raise DimensionError(f"got {len(X)} inputs but {len(Y)} outputs")
        self.inputs = X
        self.outputs = Y
        self._interpolator = None
        self._tree = None
        self._variation = None
        if not len(X):
            self.bandwidth = float(bandwidth) if bandwidth else 1.0
            return
        if bandwidth is None:
            distances = pdist(X) if len(X) > 1 else np.array([])
            distances = distances[distances > 0.0]
            bandwidth = float(np.median(distances)) if len(distances) else 1.0
        if not bandwidth > 0.0:
            raise ValueError(f"`bandwidth` must be positive, got {bandwidth!r}")
        self.bandwidth = float(bandwidth)
        self._fit()

    @classmethod
    def empty(cls, input_dim, output_dim):
        return cls(np.empty((0, input_dim)), np.empty((0, output_dim)))

    @property
    def is_empty(self):
        return not len(self.inputs)

    @property
    def samples(self):
        """The stored samples as a list of `(input, output)` pairs."""
        return list(zip(self.inputs, self.outputs))

    def __len__(self):
        return len(self.inputs)

    def add(self, x, y):
        """Return a new model with the sample `(x, y)` added. The bandwidth is re-estimated."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.is_empty:
            return SurrogateModel(x[None, :], y[None, :])
        return SurrogateModel(np.vstack([self.inputs, x]), np.vstack([self.outputs, y]))

    # ------------------------------------------------------------------------

    def _repaired_inputs(self, attempt):
        X = self.inputs.copy()
        if attempt == 0:
            return X
        scale = self.bandwidth * 1e-9 * 10.0 ** attempt
        tree = cKDTree(X)
        pairs = sorted(tree.query_pairs(_DUPLICATE_TOL * 10.0 ** attempt))
        for i, j in pairs:
            X[j] += scale * make_rng(attempt, j).standard_normal(X.shape[1])
        if pairs:
            logger.info(f"surrogate: jittered {len(pairs)} duplicate sample pair(s), scale {scale:.3g}")
        return X

    def _fit(self):
        k, d = self.inputs.shape
        epsilon = 1.0 / self.bandwidth
        degrees = [1, 0, -1] if k >= d + 1 else [0, -1]
        last_error = None
        for attempt in range(_JITTER_ROUNDS):
            X = self._repaired_inputs(attempt)
            for degree in degrees:
                try:
                    self._interpolator = RBFInterpolator(X, self.outputs, kernel="inverse_multiquadric",
                                                         epsilon=epsilon, degree=degree)
                except (np.linalg.LinAlgError, ValueError) as err:
                    last_error = err
                    continue
                self.inputs = X
                self._tree = cKDTree(X)
                self._variation = self._local_variation()
                return
        raise SurrogateError(f"could not fit the surrogate to {k} samples: {last_error}")

    def _local_variation(self):
        """Per-sample estimate of `|f(x_i) - f(x_j)| / |x_i - x_j|` over the nearest neighbors."""
        k = len(self.inputs)
        if k == 1:
            return np.ones(1)
        nn = min(_NEIGHBORS, k - 1)
        distances, indices = self._tree.query(self.inputs, k=nn + 1)
        distances, indices = distances[:, 1:], indices[:, 1:]
        dy = np.linalg.norm(self.outputs[indices] - self.outputs[:, None, :], axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(distances > 0.0, dy / distances, 0.0)
        return np.maximum(ratios.max(axis=1), _MIN_VARIATION)

    # ------------------------------------------------------------------------

    def predict(self, x):
        """Predicted output at `x` (shape `(d,)`), or at each row of `x` (shape `(q, d)`)."""
        if self.is_empty:
            raise SurrogateError("an empty surrogate cannot predict")
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        out = self._interpolator(np.atleast_2d(x))
        return out[0] if single else out

    def uncertainty(self, x):
        """Distance to the nearest sample, times the output variation around that sample."""
        if self.is_empty:
            raise SurrogateError("an empty surrogate has no uncertainty estimate")
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        distances, indices = self._tree.query(np.atleast_2d(x))
        out = distances * self._variation[indices]
        return float(out[0]) if single else out

    def nearest_distance(self, x):
        """Distance from `x` to the nearest stored input."""
        if self.is_empty:
            return np.inf
        return float(self._tree.query(np.asarray(x, dtype=float))[0])

    def __repr__(self):
        return f"SurrogateModel(<{len(self)} samples>, bandwidth={self.bandwidth:.4g})"
