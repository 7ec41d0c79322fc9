import logging
import numpy as np
import scipy.interpolate

from scipy.integrate import cumulative_trapezoid
from wtpc.estimation import ols, n_distinct
from wtpc.models.core import FittedModel, ModelClass


DEGREE = 3
REALLOCATION_GRID = 4001


def bspline_basis(i, k, d, x):
    """
    Cox-de Boor recursion for B_{i,k,d}(x), with 1-based i.
    """

    n = len(k)
    if not 1 <= i <= n - d - 1:
        raise ValueError(f"basis index must be between 1 and {n - d - 1}, is {i}")
    if any(b < a for a, b in zip(k, k[1:])):
        raise ValueError("knot vector must be nondecreasing")
    return _cox_de_boor(i - 1, k, d, x)


def _cox_de_boor(i, k, d, x):
    if d == 0:
        return 1.0 if k[i] <= x < k[i + 1] else 0.0

    if not k[i] <= x < k[i + d + 1]:
        return 0.0

    value = 0.0
    left = k[i + d] - k[i]
    if left > 0:
        value += (x - k[i]) / left * _cox_de_boor(i, k, d - 1, x)
    right = k[i + d + 1] - k[i + 1]
    if right > 0:
        value += (k[i + d + 1] - x) / right * _cox_de_boor(i + 1, k, d - 1, x)
    return value


def clamped_knots(interior, w_lo, w_hi, degree=DEGREE):
    return np.concatenate([
        np.full(degree + 1, w_lo),
        np.asarray(interior, dtype=np.float64),
        np.full(degree + 1, w_hi)])


def equidistant_knots(spec):
    interior = np.linspace(spec.w_lo, spec.w_hi, spec.m - 2)[1:-1]
    return clamped_knots(interior, spec.w_lo, spec.w_hi)


def basis_matrix(x, knots, degree=DEGREE):
    m = len(knots) - degree - 1
    basis = scipy.interpolate.BSpline(knots, np.eye(m), degree, extrapolate=True)
    return basis(np.asarray(x, dtype=np.float64))


class BSpline(FittedModel):
    """
    Cubic B-spline with m basis functions on a clamped knot vector of
    length m + 4; theta holds the coefficients alpha.
    """

    model_class = ModelClass.BSPLINE

    def __init__(self, spec, theta, train_mse=None, knots=None):
        super().__init__(spec, theta, train_mse)
        knots = equidistant_knots(spec) if knots is None else np.array(knots, dtype=np.float64)
        if len(knots) != spec.m + DEGREE + 1:
            raise ValueError(f"expected {spec.m + DEGREE + 1} knots, got {len(knots)}")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knot vector must be nondecreasing")
        self._knots = knots

    @property
    def knots(self):
        return self._knots

    @property
    def n_params(self):
        return self._spec.m

    @property
    def aux(self):
        return {'knots': [float(x) for x in self._knots]}

    def _replace_theta(self, theta):
        return BSpline(self._spec, theta, self._train_mse, knots=self._knots)

    @classmethod
    def _from_json(cls, spec, theta, aux):
        return cls(spec, theta, knots=aux.get('knots'))

    def _bspline(self):
        return scipy.interpolate.BSpline(self._knots, self._theta, DEGREE, extrapolate=True)

    def curve(self, w_eff):
        return self._bspline()(np.asarray(w_eff, dtype=np.float64))

    def second_derivative(self, x):
        return self._bspline().derivative(2)(np.asarray(x, dtype=np.float64))

    @classmethod
    def fit_knots(cls, spec, w, p, knots):
        theta = ols(basis_matrix(w, knots), p, spec.label, n_unique=n_distinct(w))
        return cls(spec, theta, knots=knots)

    @classmethod
    def fit(cls, spec, w, p):
        first = cls.fit_knots(spec, w, p, equidistant_knots(spec))
        knots = reallocate_knots(first)
        logging.debug(f"{spec.label}: reallocated interior knots {knots[DEGREE + 1:-DEGREE - 1]}")
        return cls.fit_knots(spec, w, p, knots)


def reallocate_knots(current, grid_size=REALLOCATION_GRID):
    """
    Places the interior knots so that each knot interval carries the same
    share of the integral of |S''| ** 0.5 of the current spline. End knots
    stay at the support bounds.
    """

    knots = current.knots
    spec = current.spec
    n_interior = len(knots) - 2 * (DEGREE + 1)
    if n_interior == 0:
        return knots.copy()

    x = np.linspace(spec.w_lo, spec.w_hi, grid_size)
    g = np.sqrt(np.abs(current.second_derivative(x)))

    scale = max(float(np.max(np.abs(current.theta))), 1.0)
    if np.max(g) <= 1e-9 * np.sqrt(scale):
        return knots.copy()

    g = g + 1e-3 * np.mean(g)
    cum = cumulative_trapezoid(g, x, initial=0)
    targets = np.linspace(0, cum[-1], n_interior + 2)[1:-1]
    interior = np.interp(targets, cum, x)

    return clamped_knots(interior, spec.w_lo, spec.w_hi)
