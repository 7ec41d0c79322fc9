import collections
import logging
import numpy as np

from pathlib import Path
from scipy.stats import norm
from wtpc.data.records import CleanDataset
from wtpc.dynamic.arma import ArmaModel, fit_arma
from wtpc.dynamic.glue import glue, in_band_mask
from wtpc.environmental import EnhancedModel
from wtpc.errors import DataError, FitError
from wtpc.io.common import write_json, read_json, artifact_ref, resolve_ref
from wtpc.io.scada import format_timestamp
from wtpc.residuals import ResidualProfile, analyze_residuals, residuals, rescale
from wtpc.residuals import DEFAULT_ALPHA, DEFAULT_CORRECTION


def z_value(level):
    if not 0 < level < 1:
        raise ValueError(f"confidence level must be in (0, 1), is {level}")
    return float(norm.ppf(0.5 + level / 2))


class Exogenous(collections.namedtuple('Exogenous', ['wind', 'angle', 'temperature', 'timestamps'])):
    @staticmethod
    def of(x):
        if isinstance(x, Exogenous):
            return x
        if isinstance(x, CleanDataset):
            return Exogenous(x.wind, x.angle, x.temperature, x.timestamps)
        rows = np.asarray(x, dtype=np.float64).reshape(-1, 3)
        return Exogenous(rows[:, 0], rows[:, 1], rows[:, 2], None)

    def __len__(self):
        return len(self.wind)

    def head(self, n):
        return Exogenous(
            self.wind[:n], self.angle[:n], self.temperature[:n],
            None if self.timestamps is None else self.timestamps[:n])


class Forecast:
    def __init__(self, p_hat, variance, in_band, timestamps=None):
        self._p_hat = np.asarray(p_hat, dtype=np.float64)
        self._variance = np.asarray(variance, dtype=np.float64)
        self._in_band = np.asarray(in_band, dtype=bool)
        self._timestamps = timestamps

    @property
    def p_hat(self):
        return self._p_hat

    @property
    def variance(self):
        return self._variance

    @property
    def in_band(self):
        return self._in_band

    @property
    def timestamps(self):
        return self._timestamps

    def __len__(self):
        return len(self._p_hat)

    def __iter__(self):
        return iter(zip(self._p_hat, self._variance))

    def interval(self, level=0.95):
        half = z_value(level) * np.sqrt(self._variance)
        return self._p_hat - half, self._p_hat + half

    def rows(self, level=0.95):
        lo, hi = self.interval(level)
        timestamps = self._timestamps
        if timestamps is None:
            timestamps = [None] * len(self)
        for t, p, v, a, b in zip(timestamps, self._p_hat, self._variance, lo, hi):
            yield (format_timestamp(t) if t is not None else ''), p, v, a, b


class DynamicModel:
    """
    Enhanced static curve plus an ARMA process on the rescaled residuals
    inside the Gaussian band, and white noise of variance sigma_e2 outside.
    """

    def __init__(self, enhanced, profile, arma, sigma_e2):
        if not sigma_e2 >= 0:
            raise ValueError(f"sigma_e2 must be nonnegative, is {sigma_e2}")
        self._enhanced = enhanced
        self._profile = profile
        self._arma = arma
        self._sigma_e2 = float(sigma_e2)

    @property
    def enhanced(self):
        return self._enhanced

    @property
    def profile(self):
        return self._profile

    @property
    def arma(self):
        return self._arma

    @property
    def sigma_e2(self):
        return self._sigma_e2

    @property
    def band(self):
        return self._profile.band

    def static_predict(self, exog):
        return self._enhanced.eval_enhanced(exog.wind, exog.angle, exog.temperature)

    def glued_history(self, history):
        """
        Rescaled in-band residuals of history, in time order.
        """

        if len(history) == 0:
            return np.zeros(0)
        r = residuals(self._enhanced, history)
        mask = in_band_mask(history.wind, self.band)
        return rescale(r[mask], self._profile.sigma, history.wind[mask])

    def predict_power(self, history, future_exog, steps=None):
        future = Exogenous.of(future_exog)
        if steps is not None:
            if len(future) < steps:
                raise DataError(
                    f"exogenous series has {len(future)} steps, {steps} requested")
            future = future.head(steps)

        p_static = np.atleast_1d(self.static_predict(future))
        in_band = in_band_mask(future.wind, self.band)
        p_hat = p_static.copy()
        variance = np.full(len(future), self._sigma_e2)

        distance = np.cumsum(in_band)
        n_in = int(distance[-1]) if len(future) else 0
        if n_in > 0:
            means, variances = self._arma.forecast(self.glued_history(history), n_in)
            sigma = self._profile.sigma.at(future.wind[in_band])
            d = distance[in_band] - 1
            p_hat[in_band] += sigma * means[d]
            variance[in_band] = sigma ** 2 * variances[d]

        return Forecast(p_hat, variance, in_band, future.timestamps)

    def to_json(self, enhanced_path=None):
        data = {
            'profile': self._profile.to_json(),
            'arma': self._arma.to_json(),
            'sigma_e2': self._sigma_e2
        }
        if enhanced_path is not None:
            data['enhanced_ref'] = artifact_ref(enhanced_path)
        else:
            data['enhanced'] = self._enhanced.to_json()
        return data

    @staticmethod
    def from_json(data, path=None):
        if 'enhanced_ref' in data:
            enhanced = EnhancedModel.load(resolve_ref(data['enhanced_ref'], relative_to=path))
        else:
            enhanced = EnhancedModel.from_json(data['enhanced'])
        return DynamicModel(
            enhanced,
            ResidualProfile.from_json(data['profile']),
            ArmaModel.from_json(data['arma']),
            data['sigma_e2'])

    def save(self, path, enhanced_path=None):
        return write_json(path, 'dynamic', self.to_json(enhanced_path=enhanced_path))

    @staticmethod
    def load(path):
        return DynamicModel.from_json(read_json(path, 'dynamic'), path=Path(path))


def out_of_band_variance(r, in_band):
    outside = r[~in_band]
    if len(outside) > 1:
        return float(np.var(outside))
    logging.warning("no out-of-band training records, using the overall residual variance")
    return float(np.mean(r ** 2))


def fit_dynamic(enhanced, data, q1, q2, profile=None, alpha=DEFAULT_ALPHA, band=None,
                correction=DEFAULT_CORRECTION):
    """
    Sequential estimation: residual profile and band of the enhanced model,
    then an ARMA(q1, q2) on the glued rescaled residuals.
    """

    if profile is None:
        profile = analyze_residuals(enhanced, data, alpha=alpha, band=band, correction=correction)

    r = residuals(enhanced, data)
    r_prime = rescale(r, profile.sigma, data.wind)
    glued = glue(r_prime, data.wind, profile.band, q1=q1, q2=q2)
    arma = fit_arma(glued, q1, q2)
    in_band = in_band_mask(data.wind, profile.band)

    return DynamicModel(enhanced, profile, arma, out_of_band_variance(r, in_band))


def predict_power(model, history, future_exog, steps=None):
    return model.predict_power(history, future_exog, steps=steps)


def batch_forecast(model, data, s):
    """
    For every k in data, the forecast of power at k from the history
    data[0..k-s] (empty when k < s), with exogenous values through k.
    Equivalent to calling predict_power once per k.
    """

    if s < 1:
        raise ValueError(f"s must be at least 1, is {s}")
    if not isinstance(model, DynamicModel):
        raise FitError("batch forecasts need a dynamic model")

    exog = Exogenous.of(data)
    n = len(data)
    p_hat = np.atleast_1d(model.static_predict(exog)).astype(np.float64)
    variance = np.full(n, model.sigma_e2)

    in_band = in_band_mask(data.wind, model.band)
    if not np.any(in_band):
        return Forecast(p_hat, variance, in_band, exog.timestamps)

    arma = model.arma
    values = model.glued_history(data)
    shocks = arma.innovations(values)
    n_glued = len(values)

    counts = np.cumsum(in_band)
    k = np.flatnonzero(in_band)
    origin = k - s
    start = np.where(origin >= 0, counts[np.maximum(origin, 0)], 0)
    distance = counts[k] - start

    q1, q2 = arma.q1, arma.q2
    states = np.arange(n_glued + 1)
    Y = np.zeros((n_glued + 1, q1))
    for i in range(q1):
        j = states - 1 - i
        Y[:, i] = np.where(j >= 0, values[np.maximum(j, 0)], 0.0)
    E = np.zeros((n_glued + 1, q2))
    for i in range(q2):
        j = states - 1 - i
        E[:, i] = np.where(j >= 0, shocks[np.maximum(j, 0)], 0.0)

    d_max = int(np.max(distance))
    cumulative = arma.cumulative_variance(d_max)
    means = np.empty(len(k))
    for step in range(1, d_max + 1):
        forecast = arma.mu + Y @ arma.a + E @ arma.c
        hit = distance == step
        means[hit] = forecast[start[hit]]
        if q1:
            Y = np.hstack([forecast[:, None], Y[:, :-1]])
        if q2:
            E = np.hstack([np.zeros((n_glued + 1, 1)), E[:, :-1]])

    sigma = model.profile.sigma.at(data.wind[k])
    p_hat[k] += sigma * means
    variance[k] = sigma ** 2 * cumulative[distance - 1]

    return Forecast(p_hat, variance, in_band, exog.timestamps)
