import numpy as np

from numpy.polynomial import polynomial as P
from wtpc.errors import FitError
from wtpc.estimation import ols, n_distinct
from wtpc.models.core import FittedModel, ModelClass


class Scaling:
    def __init__(self, p_bar, w_bar, d_p, d_w):
        self.p_bar = float(p_bar)
        self.w_bar = float(w_bar)
        self.d_p = float(d_p)
        self.d_w = float(d_w)

    @staticmethod
    def of(w, p):
        return Scaling(np.mean(p), np.mean(w), np.std(p), np.std(w))

    def to_json(self):
        return {
            'p_bar': self.p_bar,
            'w_bar': self.w_bar,
            'd_p': self.d_p,
            'd_w': self.d_w
        }


class Polynomial(FittedModel):
    """
    p = p_bar + d_p sum_i t_i ((w - w_bar) / d_w) ** i, i = 0..m.
    """

    model_class = ModelClass.POLYNOMIAL

    def __init__(self, spec, theta, train_mse=None, scaling=None):
        super().__init__(spec, theta, train_mse)
        self._scaling = scaling or Scaling(0.0, 0.0, 1.0, 1.0)

    @property
    def scaling(self):
        return self._scaling

    @property
    def n_params(self):
        return self._spec.m + 1

    @property
    def aux(self):
        return {'scaling': self._scaling.to_json()}

    def _replace_theta(self, theta):
        return Polynomial(self._spec, theta, self._train_mse, scaling=self._scaling)

    @classmethod
    def _from_json(cls, spec, theta, aux):
        return cls(spec, theta, scaling=Scaling(**aux['scaling']))

    @staticmethod
    def design(w_eff, m, scaling):
        u = (np.asarray(w_eff, dtype=np.float64) - scaling.w_bar) / scaling.d_w
        return P.polyvander(u, m)

    def curve(self, w_eff):
        s = self._scaling
        u = (np.asarray(w_eff, dtype=np.float64) - s.w_bar) / s.d_w
        return s.p_bar + s.d_p * P.polyval(u, self._theta)

    def raw_coefficients(self):
        """
        Coefficients in powers of the unscaled wind, lowest degree first.
        For inspection only; evaluation always uses the scaled form.
        """

        s = self._scaling
        u = np.polynomial.Polynomial([-s.w_bar / s.d_w, 1.0 / s.d_w])
        raw = s.d_p * np.polynomial.Polynomial(self._theta)(u) + s.p_bar
        return raw.coef

    @classmethod
    def fit(cls, spec, w, p):
        scaling = Scaling.of(w, p)
        if scaling.d_w == 0:
            raise FitError(f"{spec.label}: wind is constant, cannot rescale")
        if scaling.d_p == 0:
            scaling = Scaling(scaling.p_bar, scaling.w_bar, 1.0, scaling.d_w)
        y = (p - scaling.p_bar) / scaling.d_p
        theta = ols(cls.design(w, spec.m, scaling), y, spec.label, n_unique=n_distinct(w))
        return cls(spec, theta, scaling=scaling)
