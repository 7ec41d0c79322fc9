import logging
import numpy as np
import scipy.linalg

from cached_property import cached_property
from wtpc.errors import DataError, RankDeficientError
from wtpc.io.common import write_csv


def wind_keys(w):
    """
    Integer keys of one-decimal wind values (tenths of m/s). Two quantized
    winds share a key iff their decimal strings are equal.
    """

    return np.rint(np.asarray(w, dtype=np.float64) * 10).astype(np.int64)


def key_to_wind(keys):
    return np.asarray(keys, dtype=np.float64) / 10


class BinnedStats:
    def __init__(self, keys, counts, means, ss):
        self._keys = keys
        self._counts = counts
        self._means = means
        self._ss = ss

    @staticmethod
    def compute(winds, values):
        values = np.asarray(values, dtype=np.float64)
        if len(values) == 0:
            raise DataError("cannot bin empty data")
        keys, inverse, counts = np.unique(
            wind_keys(winds), return_inverse=True, return_counts=True)
        means = np.bincount(inverse, weights=values) / counts
        ss = np.bincount(inverse, weights=(values - means[inverse]) ** 2)
        return BinnedStats(keys, counts, means, ss)

    @property
    def keys(self):
        return self._keys

    @cached_property
    def winds(self):
        return key_to_wind(self._keys)

    @property
    def counts(self):
        return self._counts

    @property
    def means(self):
        return self._means

    @property
    def ss(self):
        return self._ss

    @property
    def n(self):
        return int(np.sum(self._counts))

    @cached_property
    def std(self):
        return np.sqrt(self._ss / self._counts)

    @cached_property
    def sem(self):
        with np.errstate(divide='ignore', invalid='ignore'):
            sample_std = np.sqrt(self._ss / np.maximum(self._counts - 1, 1))
            return np.where(self._counts > 1, sample_std / np.sqrt(self._counts), np.nan)

    def __len__(self):
        return len(self._keys)

    def items(self):
        for w, n, m, ss in zip(self.winds, self._counts, self._means, self._ss):
            yield float(w), (int(n), float(m), float(ss))

    def to_dict(self):
        return dict(self.items())

    def write_csv(self, path):
        return write_csv(
            path,
            ['wind', 'count', 'mean', 'std', 'sem'],
            zip(self.winds, self._counts, self._means, self.std, self.sem))


def binned_means(data):
    data.require_nonempty()
    return BinnedStats.compute(data.wind, data.power)


def mse(model, data):
    data.require_nonempty()
    residuals = data.power - model.predict(data)
    return float(np.mean(residuals ** 2))


def mse_lower_bound(data, spec=None):
    """
    Smallest MSE any function of the (quantized) wind can attain on data.
    With a ModelSpec, the bound is taken over constrained models: winds are
    clamped to the support first and records at or above cutout contribute
    their squared power, since every constrained model predicts 0 there.
    """

    data.require_nonempty()

    if spec is None:
        return float(np.sum(BinnedStats.compute(data.wind, data.power).ss) / len(data))

    w = data.wind
    p = data.power
    zero = w >= spec.cutout
    total = float(np.sum(p[zero] ** 2))
    if not np.all(zero):
        w_eff = np.clip(w[~zero], spec.w_lo, spec.w_hi)
        total += float(np.sum(BinnedStats.compute(w_eff, p[~zero]).ss))
    return total / len(data)


def n_distinct(w):
    return len(np.unique(wind_keys(w)))


def ols(design, y, label, n_unique=None):
    """
    Least squares through an orthogonal decomposition. Raises when the
    design cannot even separate the distinct regressor values.
    """

    coef, _, rank, _ = scipy.linalg.lstsq(design, y, lapack_driver='gelsd')
    n_params = design.shape[1]
    needed = n_params if n_unique is None else min(n_params, n_unique)
    if rank < needed:
        raise RankDeficientError(label, rank, n_params)
    if rank < n_params:
        logging.warning(
            f"{label}: saturated design (rank {rank} < {n_params} parameters), "
            f"using the minimum norm solution")
    return coef
