import numpy as np

from wtpc.estimation import ols, n_distinct, wind_keys, key_to_wind
from wtpc.models.core import FittedModel, ModelClass, ModelSpec


def equidistant_splits(spec):
    k = np.arange(spec.m)
    return spec.w_lo + k * (spec.w_hi - spec.w_lo) / spec.m


class PiecewiseLinear(FittedModel):
    """
    L(w) = t + sum_k [s_k <= w] (w - s_k) t_k, with s_0 at the lower end
    of the support so that t is the height there. theta is (t, t_0, ..., t_{m-1}).
    """

    model_class = ModelClass.PIECEWISE_LINEAR

    def __init__(self, spec, theta, train_mse=None, splits=None):
        super().__init__(spec, theta, train_mse)
        self._splits = np.array(
            equidistant_splits(spec) if splits is None else splits, dtype=np.float64)
        if len(self._splits) != spec.m:
            raise ValueError(f"expected {spec.m} split points, got {len(self._splits)}")
        if np.any(np.diff(self._splits) <= 0):
            raise ValueError("split points must be strictly increasing")

    @property
    def splits(self):
        return self._splits

    @property
    def n_params(self):
        return self._spec.m + 1

    @property
    def aux(self):
        return {'splits': [float(x) for x in self._splits]}

    def _replace_theta(self, theta):
        return PiecewiseLinear(self._spec, theta, self._train_mse, splits=self._splits)

    @classmethod
    def _from_json(cls, spec, theta, aux):
        return cls(spec, theta, splits=aux.get('splits'))

    @staticmethod
    def design(w_eff, splits):
        w = np.asarray(w_eff, dtype=np.float64)[:, None]
        ramps = np.where(splits[None, :] <= w, w - splits[None, :], 0.0)
        return np.hstack([np.ones((len(w), 1)), ramps])

    def curve(self, w_eff):
        return self.design(np.atleast_1d(w_eff), self._splits) @ self._theta

    @classmethod
    def fit(cls, spec, w, p, splits=None):
        splits = equidistant_splits(spec) if splits is None else np.asarray(splits, dtype=np.float64)
        theta = ols(cls.design(w, splits), p, spec.label, n_unique=n_distinct(w))
        return cls(spec, theta, splits=splits)

    @classmethod
    def fit_saturated(cls, w_eff, p, spec=None):
        """
        Splits at every distinct effective wind but the largest, which lets
        the fit interpolate the bin means.
        """

        values = key_to_wind(np.unique(wind_keys(w_eff)))
        splits = values[:-1] if len(values) > 1 else values
        if spec is None:
            spec = ModelSpec(ModelClass.PIECEWISE_LINEAR, len(splits))
        else:
            spec = ModelSpec(
                ModelClass.PIECEWISE_LINEAR, len(splits),
                w_lo=spec.w_lo, w_hi=spec.w_hi, cutout=spec.cutout)
        return cls.fit(spec, w_eff, p, splits=splits)
