import logging
import numpy as np
import scipy.linalg

from scipy.special import expit
from wtpc.errors import ConvergenceError
from wtpc.estimation import BinnedStats
from wtpc.models.core import FittedModel, ModelClass


MAX_ITERATIONS = 500
RELATIVE_TOLERANCE = 1e-10
MAX_DAMPING = 1e16


def _objective(r):
    value = float(np.mean(r ** 2))
    return value if np.isfinite(value) else np.inf


def _jacobian(residual, theta, r):
    J = np.empty((len(r), len(theta)))
    for j in range(len(theta)):
        h = np.sqrt(np.finfo(float).eps) * max(abs(theta[j]), 1.0)
        shifted = theta.copy()
        shifted[j] += h
        J[:, j] = (residual(shifted) - r) / h
    return np.nan_to_num(J, nan=0.0, posinf=0.0, neginf=0.0)


def damped_gauss_newton(residual, theta0, label, max_iterations=MAX_ITERATIONS,
                        rtol=RELATIVE_TOLERANCE):
    """
    Minimizes mean(residual(theta) ** 2) with Levenberg-style damping
    (damping multiplied by 10 on rejected steps, divided by 10 on accepted
    ones). Converges when the relative objective decrease drops below rtol
    or no damped step decreases the objective any more.
    """

    theta = np.array(theta0, dtype=np.float64)
    r = residual(theta)
    obj = _objective(r)
    if not np.isfinite(obj):
        raise ConvergenceError(label, obj, 0)

    damping = 1e-3

    for iteration in range(1, max_iterations + 1):
        J = _jacobian(residual, theta, r)
        scale = np.sqrt(np.maximum(np.sum(J ** 2, axis=0), 1e-12))

        while True:
            A = np.vstack([J, np.sqrt(damping) * np.diag(scale)])
            b = np.concatenate([-r, np.zeros(len(theta))])
            step = scipy.linalg.lstsq(A, b)[0]
            candidate = theta + step
            r_new = residual(candidate)
            obj_new = _objective(r_new)
            if obj_new <= obj:
                damping = max(damping / 10, 1e-12)
                break
            damping *= 10
            if damping > MAX_DAMPING:
                logging.debug(f"{label}: no descent step left after {iteration} iterations")
                return theta, obj

        decrease = (obj - obj_new) / obj if obj > 0 else 0.0
        theta, r, obj = candidate, r_new, obj_new

        logging.debug(f"{label}: iteration {iteration}, objective {obj}, damping {damping}")

        if decrease < rtol:
            return theta, obj

    raise ConvergenceError(label, obj, max_iterations)


def half_range_wind(w, p):
    stats = BinnedStats.compute(w, p)
    lo, hi = np.min(stats.means), np.max(stats.means)
    i = np.argmin(np.abs(stats.means - (lo + hi) / 2))
    return lo, hi, float(stats.winds[i])


class LogisticModel(FittedModel):
    @property
    def n_params(self):
        return self._spec.m

    def _replace_theta(self, theta):
        return type(self)(self._spec, theta, self._train_mse)

    @staticmethod
    def initial_theta(w, p):
        raise NotImplementedError()

    @classmethod
    def fit(cls, spec, w, p):
        theta0 = cls.initial_theta(w, p)

        def residual(theta):
            with np.errstate(all='ignore'):
                return cls(spec, theta).curve(w) - p

        theta, _ = damped_gauss_newton(residual, theta0, spec.label)
        return cls(spec, theta)


class Logistic5PL(LogisticModel):
    """
    p = t5 + (t1 - t5) / (1 + (w / t2) ** t3) ** t4
    """

    model_class = ModelClass.LOGISTIC_5PL

    def curve(self, w_eff):
        t1, t2, t3, t4, t5 = self._theta
        return t5 + (t1 - t5) / np.power(1 + np.power(w_eff / t2, t3), t4)

    @staticmethod
    def initial_theta(w, p):
        lo, hi, w_half = half_range_wind(w, p)
        return np.array([lo, w_half, 6.0, 1.0, hi])


class MStukel(LogisticModel):
    """
    Stukel's asymmetric logistic with a quartic left branch:
    p = t1 + (t4 - t1) / (1 + exp(-eta)), where
    eta = t2 (w - t3) + tl (w - t3) ** 4 [w < t3] + tu (w - t3) ** 2 [w >= t3].
    theta is laid out as (t1, t2, t3, t4, tu, tl).
    """

    model_class = ModelClass.MSTUKEL

    def curve(self, w_eff):
        t1, t2, t3, t4, tu, tl = self._theta
        d = np.asarray(w_eff, dtype=np.float64) - t3
        left = d < 0
        eta = t2 * d + np.where(left, tl * d ** 4, tu * d ** 2)
        return t1 + (t4 - t1) * expit(eta)

    @staticmethod
    def initial_theta(w, p):
        lo, hi, w_half = half_range_wind(w, p)
        return np.array([lo, 0.6, w_half, hi, 0.0, 0.0])
