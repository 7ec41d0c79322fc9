import collections
import concurrent.futures
import logging
import math
import numpy as np

from tqdm import tqdm
from wtpc.errors import FitError, WtpcError
from wtpc.io.common import write_csv
from wtpc.models import ModelClass, ModelSpec, fit


DEFAULT_GRIDS = {
    ModelClass.PIECEWISE_LINEAR: list(range(1, 31)),
    ModelClass.POLYNOMIAL: list(range(1, 16)),
    ModelClass.BSPLINE: list(range(4, 31)),
    ModelClass.LOGISTIC_5PL: [5],
    ModelClass.MSTUKEL: [6]
}


def bic(n_params, n_samples, train_mse):
    if n_samples < 1:
        raise ValueError(f"n_samples must be at least 1, is {n_samples}")
    if not train_mse > 0:
        raise FitError(
            f"BIC is undefined for train MSE {train_mse} (model interpolates the data)")
    n = n_samples
    return math.log(n) * n_params + n * math.log(train_mse) + n * math.log(2 * math.pi) + 1


class SweepEntry(collections.namedtuple('SweepEntry', ['m', 'train_mse', 'bic', 'n_params'])):
    pass


class SelectionResult:
    def __init__(self, model_class, sweep, chosen_model, failures=None):
        if not sweep:
            raise ValueError("sweep must not be empty")
        self._model_class = model_class
        self._sweep = sweep
        self._chosen_model = chosen_model
        self._failures = dict(failures or {})

    @property
    def model_class(self):
        return self._model_class

    @property
    def sweep(self):
        return self._sweep

    @property
    def chosen_m(self):
        return self._chosen_model.spec.m

    @property
    def chosen_model(self):
        return self._chosen_model

    @property
    def failures(self):
        return self._failures

    def write_csv(self, path):
        return write_csv(
            path, ['m', 'mse', 'bic'],
            [(e.m, e.train_mse, e.bic) for e in self._sweep])


def _fit_order(model_class, m, data):
    model = fit(ModelSpec(model_class, m), data)
    return model, bic(model.n_params, len(data), model.train_mse)


def select_order(model_class, m_grid, data, workers=1, progress=False):
    model_class = ModelClass.parse(model_class)
    m_grid = [int(m) for m in m_grid]
    if not m_grid:
        raise ValueError("order grid is empty")
    if model_class.fixed_order is not None:
        m_grid = [model_class.fixed_order]

    results = {}
    failures = {}

    def record(m, future_or_value):
        try:
            results[m] = future_or_value()
        except (WtpcError, ValueError) as e:
            logging.warning(f"skipping {model_class.value} order {m}: {e}")
            failures[m] = str(e)

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            futures = dict(
                (m, executor.submit(_fit_order, model_class, m, data)) for m in m_grid)
            for m in tqdm(m_grid, desc=f"sweeping {model_class.value}", disable=not progress):
                record(m, futures[m].result)
    else:
        for m in tqdm(m_grid, desc=f"sweeping {model_class.value}", disable=not progress):
            record(m, lambda: _fit_order(model_class, m, data))

    if not results:
        raise FitError(
            f"all orders of {model_class.value} failed: "
            + "; ".join(f"m={m}: {e}" for m, e in sorted(failures.items())))

    sweep = [
        SweepEntry(m, results[m][0].train_mse, results[m][1], results[m][0].n_params)
        for m in sorted(results)]
    best = min(sweep, key=lambda e: (e.bic, e.m))

    logging.info(f"selected {model_class.value} order {best.m} (BIC {best.bic})")

    return SelectionResult(model_class, sweep, results[best.m][0], failures)


def delta(model_a, model_b, data):
    """
    Mean squared difference of the two models' predictions on data,
    relative to the smaller of their MSEs.
    """

    data.require_nonempty()
    p_a = model_a.predict(data)
    p_b = model_b.predict(data)
    mse_a = float(np.mean((data.power - p_a) ** 2))
    mse_b = float(np.mean((data.power - p_b) ** 2))
    if min(mse_a, mse_b) <= 0:
        raise FitError("delta is undefined when a model has zero MSE")
    return float(np.mean((p_a - p_b) ** 2)) / min(mse_a, mse_b)
