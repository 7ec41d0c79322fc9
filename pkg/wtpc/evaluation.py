import collections
import fractions
import logging
import math
import numpy as np

from scipy.stats import norm
from tqdm import tqdm
from wtpc.dynamic.model import DynamicModel, Exogenous, batch_forecast, z_value
from wtpc.errors import DataError, InsufficientDataError
from wtpc.estimation import binned_means, mse
from wtpc.io.common import AbstractWriter, dumps, write_csv


DELTA = 10


def horizon_steps(h, delta=DELTA):
    """
    Exact ceil(h / delta) for decimal horizons and steps.
    """

    ratio = fractions.Fraction(str(h)) / fractions.Fraction(str(delta))
    return math.ceil(ratio)


def _naive_forecasts(model, validation, s, history_steps):
    n = len(validation)
    p_hat = np.empty(n - s)
    for k in range(s, n):
        t0 = k - s
        first = 0 if history_steps is None else max(t0 + 1 - history_steps, 0)
        history = validation.subset(np.arange(first, t0 + 1))
        future = Exogenous.of(validation.subset(np.arange(t0 + 1, k + 1)))
        p_hat[k - s] = model.predict_power(history, future).p_hat[-1]
    return p_hat


def mse_at_horizon(model, validation, h, delta=DELTA, history_steps=None):
    """
    MSE of h-minute-ahead forecasts on validation. Static models predict
    without history, so their value is the plain validation MSE. With
    history_steps, each forecast only sees that many past records.
    """

    if not h > 0:
        raise ValueError(f"horizon must be positive, is {h}")
    validation.require_nonempty("validation data")

    s = horizon_steps(h, delta)
    n = len(validation)
    if s >= n:
        raise InsufficientDataError(
            f"horizon of {h} minutes ({s} steps) exceeds the validation series ({n} records)")

    if not isinstance(model, DynamicModel):
        return mse(model, validation)

    if history_steps is None:
        p_hat = batch_forecast(model, validation, s).p_hat[s:]
    else:
        p_hat = _naive_forecasts(model, validation, s, history_steps)

    return float(np.mean((validation.power[s:] - p_hat) ** 2))


def coverage_audit(model, validation, level=0.95, delta=DELTA):
    """
    Fraction of validation records inside the rolling one-step-ahead
    prediction band at the given level.
    """

    if len(validation) < 2:
        raise DataError("coverage needs at least two validation records")
    forecast = batch_forecast(model, validation, 1)
    lo, hi = forecast.interval(level)
    p = validation.power
    inside = (p >= lo) & (p <= hi)
    return float(np.mean(inside[1:]))


def static_coverage(model, validation, residual_std, level=0.95):
    """
    Coverage of the constant-width band p_hat +- z * residual_std of a
    static model.
    """

    validation.require_nonempty("validation data")
    half = z_value(level) * residual_std
    r = validation.power - model.predict(validation)
    return float(np.mean(np.abs(r) <= half))


def full_coverage_level(model, validation, residual_std):
    """
    Confidence level at which the static constant-width band first covers
    every validation record.
    """

    validation.require_nonempty("validation data")
    r = validation.power - model.predict(validation)
    return float(2 * norm.cdf(np.max(np.abs(r)) / residual_std) - 1)


class HorizonReport:
    def __init__(self, horizons, static_mse, enhanced_mse, dynamic_mse, coverage, level,
                 static_coverage=None, full_coverage_level=None, binned=None):
        self._horizons = list(horizons)
        self._static_mse = static_mse
        self._enhanced_mse = enhanced_mse
        self._dynamic_mse = collections.OrderedDict(dynamic_mse)
        self._coverage = collections.OrderedDict(coverage)
        self._level = level
        self._static_coverage = static_coverage
        self._full_coverage_level = full_coverage_level
        self._binned = binned

    @property
    def horizons(self):
        return self._horizons

    @property
    def static_mse(self):
        return self._static_mse

    @property
    def enhanced_mse(self):
        return self._enhanced_mse

    @property
    def dynamic_mse(self):
        return self._dynamic_mse

    @property
    def coverage(self):
        return self._coverage

    @property
    def level(self):
        return self._level

    @property
    def static_coverage(self):
        return self._static_coverage

    @property
    def full_coverage_level(self):
        return self._full_coverage_level

    @property
    def binned(self):
        return self._binned

    def horizon_rows(self):
        for i, h in enumerate(self._horizons):
            row = [h, self._static_mse, self._enhanced_mse]
            row.extend(values[i] for values in self._dynamic_mse.values())
            yield row

    def to_json(self):
        return {
            'horizons': self._horizons,
            'static_mse': self._static_mse,
            'enhanced_mse': self._enhanced_mse,
            'dynamic_mse': dict(self._dynamic_mse),
            'coverage': dict(self._coverage),
            'static_coverage': self._static_coverage,
            'full_coverage_level': self._full_coverage_level,
            'level': self._level
        }


class ReportWriter(AbstractWriter):
    def __init__(self, path, report, exist_ok=True):
        super().__init__(path, exist_ok=exist_ok)
        self._report = report

    def _write(self, base_path):
        report = self._report

        written = [write_csv(
            base_path / 'horizons.csv',
            ['horizon', 'static', 'enhanced'] + [f"dynamic_{k}" for k in report.dynamic_mse],
            report.horizon_rows())]

        coverage_rows = [(k, report.level, v) for k, v in report.coverage.items()]
        if report.static_coverage is not None:
            coverage_rows.insert(0, ('static', report.level, report.static_coverage))
        written.append(write_csv(
            base_path / 'coverage.csv', ['model', 'level', 'coverage'], coverage_rows))

        if report.binned is not None:
            written.append(report.binned.write_csv(base_path / 'binned.csv'))

        with open(base_path / 'summary.json', 'wb') as f:
            f.write(dumps(report.to_json()))
        written.append(base_path / 'summary.json')

        return written


def emit_report(report, path):
    return ReportWriter(path, report).write()


def config_label(model):
    return f"arma_{model.arma.q1}_{model.arma.q2}"


def evaluate(static, enhanced, dynamics, validation, horizons, level=0.95, delta=DELTA,
             residual_std=None, progress=False):
    horizons = list(horizons)
    if not horizons:
        raise ValueError("no horizons to evaluate")

    static_value = mse_at_horizon(static, validation, horizons[0], delta)
    enhanced_value = mse_at_horizon(enhanced, validation, horizons[0], delta)

    dynamic_mse = collections.OrderedDict()
    coverage = collections.OrderedDict()
    for model in dynamics:
        label = config_label(model)
        dynamic_mse[label] = [
            mse_at_horizon(model, validation, h, delta)
            for h in tqdm(horizons, desc=f"evaluating {label}", disable=not progress)]
        coverage[label] = coverage_audit(model, validation, level=level, delta=delta)
        logging.info(f"{label}: coverage {coverage[label]} at level {level}")

    return HorizonReport(
        horizons, static_value, enhanced_value, dynamic_mse, coverage, level,
        static_coverage=None if residual_std is None else static_coverage(
            enhanced, validation, residual_std, level),
        full_coverage_level=None if residual_std is None else full_coverage_level(
            enhanced, validation, residual_std),
        binned=binned_means(validation))
