import logging
import math
import numpy as np
import scipy.linalg

from scipy.optimize import least_squares
from scipy.signal import lfilter
from wtpc.errors import ConvergenceError, InsufficientDataError
from wtpc.io.common import write_json, read_json


ROOT_MARGIN = 1e-3
STATIONARY_TRUNCATION = 100000


def _project_roots(coefficients, sign):
    """
    Reflects roots of z^q - sign * (c_1 z^(q-1) + ... + c_q) that lie on or
    outside the unit circle to the inside.
    """

    coefficients = np.asarray(coefficients, dtype=np.float64)
    if len(coefficients) == 0:
        return coefficients, False
    roots = np.roots(np.concatenate([[1.0], -sign * coefficients]))
    outside = np.abs(roots) >= 1 - 1e-6
    if not np.any(outside):
        return coefficients, False
    roots = np.where(np.abs(roots) > 1, 1 / np.conj(roots), roots)
    modulus = np.abs(roots)
    roots = np.where(modulus >= 1 - 1e-6, roots / modulus * (1 - ROOT_MARGIN), roots)
    projected = -sign * np.real(np.poly(roots))[1:]
    return projected, True


def max_root_modulus(coefficients, sign):
    coefficients = np.asarray(coefficients, dtype=np.float64)
    if len(coefficients) == 0:
        return 0.0
    return float(np.max(np.abs(np.roots(np.concatenate([[1.0], -sign * coefficients])))))


class ArmaModel:
    """
    r_t = mu + e_t + sum_i a_i r_{t-i} + sum_i c_i e_{t-i}, with e_t white
    noise of variance sigma_eps2. Filtering starts from zero pre-sample
    values and innovations.
    """

    def __init__(self, a=(), c=(), mu=0.0, sigma_eps2=1.0):
        self._a = np.array(a, dtype=np.float64)
        self._c = np.array(c, dtype=np.float64)
        self._mu = float(mu)
        self._sigma_eps2 = float(sigma_eps2)
        if not self._sigma_eps2 > 0:
            raise ValueError(f"sigma_eps2 must be positive, is {sigma_eps2}")

    @property
    def q1(self):
        return len(self._a)

    @property
    def q2(self):
        return len(self._c)

    @property
    def a(self):
        return self._a

    @property
    def c(self):
        return self._c

    @property
    def mu(self):
        return self._mu

    @property
    def sigma_eps2(self):
        return self._sigma_eps2

    @property
    def ar_polynomial(self):
        return np.concatenate([[1.0], -self._a])

    @property
    def ma_polynomial(self):
        return np.concatenate([[1.0], self._c])

    @property
    def is_stable(self):
        return max_root_modulus(self._a, 1) < 1

    @property
    def is_invertible(self):
        return max_root_modulus(self._c, -1) < 1

    def innovations(self, values):
        values = np.asarray(values, dtype=np.float64)
        if len(values) == 0:
            return values
        driven = lfilter(self.ar_polynomial, self.ma_polynomial, values)
        offset = lfilter([1.0], self.ma_polynomial, np.full(len(values), self._mu))
        return driven - offset

    def css(self, values):
        e = self.innovations(values)
        return float(np.dot(e, e))

    def psi_weights(self, n):
        impulse = np.zeros(n)
        if n > 0:
            impulse[0] = 1.0
        return lfilter(self.ma_polynomial, self.ar_polynomial, impulse)

    def forecast_variance(self, h_steps):
        if h_steps < 1:
            raise ValueError(f"h_steps must be at least 1, is {h_steps}")
        psi = self.psi_weights(h_steps)
        return self._sigma_eps2 * float(np.sum(psi ** 2))

    def cumulative_variance(self, h_max):
        psi = self.psi_weights(h_max)
        return self._sigma_eps2 * np.cumsum(psi ** 2)

    @property
    def stationary_variance(self):
        return self._sigma_eps2 * float(np.sum(self.psi_weights(STATIONARY_TRUNCATION) ** 2))

    @property
    def mean(self):
        return self._mu / (1 - np.sum(self._a))

    def autocorrelation(self, lags):
        psi = self.psi_weights(STATIONARY_TRUNCATION)
        gamma0 = float(np.dot(psi, psi))
        return np.array([
            float(np.dot(psi[:len(psi) - k], psi[k:])) / gamma0 for k in lags])

    def forecast(self, history, h_steps):
        """
        Point forecasts for steps 1..h_steps after the end of history
        (future innovations at 0) and their variances.
        """

        if h_steps < 1:
            raise ValueError(f"h_steps must be at least 1, is {h_steps}")
        history = np.asarray(history, dtype=np.float64)
        e = self.innovations(history)

        q1, q2 = self.q1, self.q2
        values = list(np.concatenate([np.zeros(q1), history])[len(history):][::-1]) if q1 else []
        shocks = list(np.concatenate([np.zeros(q2), e])[len(e):][::-1]) if q2 else []

        means = np.empty(h_steps)
        for j in range(h_steps):
            x = self._mu + float(np.dot(self._a, values)) + float(np.dot(self._c, shocks))
            means[j] = x
            if q1:
                values = [x] + values[:-1]
            if q2:
                shocks = [0.0] + shocks[:-1]

        return means, self.cumulative_variance(h_steps)

    def simulate(self, n, rng, burn_in=500):
        eps = rng.standard_normal(n + burn_in) * math.sqrt(self._sigma_eps2)
        x = lfilter(self.ma_polynomial, self.ar_polynomial, eps)
        x += lfilter([1.0], self.ar_polynomial, np.full(n + burn_in, self._mu))
        return x[burn_in:]

    def with_unit_variance(self):
        """
        Same dynamics, innovation variance scaled to a unit marginal variance.
        """

        psi = self.psi_weights(STATIONARY_TRUNCATION)
        return ArmaModel(self._a, self._c, self._mu, 1.0 / float(np.dot(psi, psi)))

    def to_json(self):
        return {
            'q1': self.q1,
            'q2': self.q2,
            'a': self._a.tolist(),
            'c': self._c.tolist(),
            'mu': self._mu,
            'sigma_eps2': self._sigma_eps2
        }

    @staticmethod
    def from_json(data):
        model = ArmaModel(data['a'], data['c'], data['mu'], data['sigma_eps2'])
        if model.q1 != data['q1'] or model.q2 != data['q2']:
            raise ValueError("ARMA orders do not match coefficient counts")
        return model

    def save(self, path):
        return write_json(path, 'arma', self.to_json())

    @staticmethod
    def load(path):
        return ArmaModel.from_json(read_json(path, 'arma'))


def _lagged(x, lags, start):
    return np.column_stack([x[start - i:len(x) - i] for i in range(1, lags + 1)])


def _hannan_rissanen(x, q1, q2):
    n = len(x)
    e = np.zeros(n)
    start = q1

    if q2 > 0:
        long_order = int(math.ceil(10 * math.log(n)))
        if n <= 2 * long_order + q2:
            raise InsufficientDataError(
                f"series of length {n} is too short for the long AR order {long_order}")
        X = np.hstack([np.ones((n - long_order, 1)), _lagged(x, long_order, long_order)])
        coef = scipy.linalg.lstsq(X, x[long_order:])[0]
        e[long_order:] = x[long_order:] - X @ coef
        start = max(q1, long_order + q2)

    columns = [np.ones(n - start)]
    if q1:
        columns.extend(_lagged(x, q1, start).T)
    if q2:
        columns.extend(_lagged(e, q2, start).T)
    X = np.column_stack(columns)
    coef = scipy.linalg.lstsq(X, x[start:])[0]
    return coef[0], coef[1:1 + q1], coef[1 + q1:]


def _stabilize(a, c):
    a, reflected_a = _project_roots(a, 1)
    c, reflected_c = _project_roots(c, -1)
    if reflected_a or reflected_c:
        logging.info("projected ARMA coefficients into the stable and invertible region")
    return a, c


def fit_arma(series, q1, q2, max_nfev=5000):
    """
    Conditional sum of squares estimate: long-AR proxy innovations, a
    regression on lagged values and proxies, then numerical refinement.
    """

    if q1 < 0 or q2 < 0:
        raise ValueError(f"ARMA orders must be nonnegative, got ({q1}, {q2})")

    x = np.asarray(getattr(series, 'values', series), dtype=np.float64)
    n = len(x)
    if n < 10 * (q1 + q2 + 1):
        raise InsufficientDataError(
            f"insufficient data for dynamic layer: {n} samples for ARMA({q1},{q2})")

    if q1 == 0 and q2 == 0:
        mu = float(np.mean(x))
        return ArmaModel((), (), mu, float(np.mean((x - mu) ** 2)))

    mu, a, c = _hannan_rissanen(x, q1, q2)
    a, c = _stabilize(a, c)

    def residuals(params):
        return ArmaModel(params[1:1 + q1], params[1 + q1:], params[0], 1.0).innovations(x)

    result = least_squares(
        residuals, np.concatenate([[mu], a, c]), method='lm', max_nfev=max_nfev)
    if result.status == 0 or not np.all(np.isfinite(result.x)):
        raise ConvergenceError(f"ARMA({q1},{q2})", float(2 * result.cost), result.nfev)

    mu = float(result.x[0])
    a, c = _stabilize(result.x[1:1 + q1], result.x[1 + q1:])

    e = ArmaModel(a, c, mu, 1.0).innovations(x)
    model = ArmaModel(a, c, mu, float(np.dot(e, e)) / n)

    assert model.is_stable and model.is_invertible

    logging.info(
        f"fitted ARMA({q1},{q2}) on {n} samples: mu={mu}, sigma_eps2={model.sigma_eps2}")

    return model


def forecast_residual(model, history, h_steps):
    means, variances = model.forecast(getattr(history, 'values', history), h_steps)
    return float(means[-1]), float(variances[-1])
