import collections
import enum
import numpy as np

from wtpc.errors import DataError, FitError
from wtpc.io.common import write_json, read_json


W_LO = 3.5
W_HI = 15.0
CUTOUT = 25.0


class ModelClass(enum.Enum):
    LOGISTIC_5PL = '5pl'
    MSTUKEL = 'mstukel'
    PIECEWISE_LINEAR = 'piecewise'
    POLYNOMIAL = 'polynomial'
    BSPLINE = 'spline'

    @staticmethod
    def parse(x):
        if isinstance(x, ModelClass):
            return x
        try:
            return ModelClass(str(x).lower())
        except ValueError:
            choices = ', '.join(c.value for c in ModelClass)
            raise ValueError(f"unknown model class '{x}', expected one of {choices}")

    @property
    def fixed_order(self):
        return FIXED_ORDERS.get(self)


FIXED_ORDERS = {
    ModelClass.LOGISTIC_5PL: 5,
    ModelClass.MSTUKEL: 6
}

MIN_ORDERS = {
    ModelClass.BSPLINE: 4
}


class ModelSpec(collections.namedtuple('ModelSpec', ['model_class', 'm', 'w_lo', 'w_hi', 'cutout'])):
    def __new__(cls, model_class, m=None, w_lo=W_LO, w_hi=W_HI, cutout=CUTOUT):
        model_class = ModelClass.parse(model_class)

        fixed = model_class.fixed_order
        if fixed is not None:
            if m is not None and m != fixed:
                raise ValueError(
                    f"{model_class.value} has a fixed order of {fixed}, got {m}")
            m = fixed
        elif m is None:
            raise ValueError(f"{model_class.value} needs an order m")

        m = int(m)
        if m < MIN_ORDERS.get(model_class, 1):
            raise ValueError(
                f"order of {model_class.value} must be at least "
                f"{MIN_ORDERS.get(model_class, 1)}, is {m}")
        if not w_lo < w_hi < cutout:
            raise ValueError(
                f"expected w_lo < w_hi < cutout, got {w_lo}, {w_hi}, {cutout}")

        return super().__new__(cls, model_class, m, float(w_lo), float(w_hi), float(cutout))

    @property
    def label(self):
        return f"{self.model_class.value}(m={self.m})"

    def to_json(self):
        return {
            'class': self.model_class.value,
            'm': self.m,
            'support': [self.w_lo, self.w_hi],
            'cutout': self.cutout
        }

    @staticmethod
    def from_json(data):
        w_lo, w_hi = data.get('support', (W_LO, W_HI))
        return ModelSpec(
            data['class'], data['m'],
            w_lo=w_lo, w_hi=w_hi, cutout=data.get('cutout', CUTOUT))


def check_wind(w):
    w = np.asarray(w, dtype=np.float64)
    if np.any(np.isnan(w)):
        raise ValueError("wind contains NaN")
    if np.any(w < 0):
        raise ValueError(f"wind must be nonnegative, got {w[w < 0][0]}")
    return w


def constrain_input(w, spec):
    """
    Maps a wind speed to the effective input of the constrained model.
    Returns (w_eff, zero_flag); zero_flag marks winds at or above cutout,
    whose predicted power is 0.
    """

    if w < 0:
        raise ValueError(f"wind must be nonnegative, got {w}")
    if w >= spec.cutout:
        return min(max(w, spec.w_lo), spec.w_hi), True
    return min(max(w, spec.w_lo), spec.w_hi), False


def constrain_array(w, spec):
    w = check_wind(w)
    return np.clip(w, spec.w_lo, spec.w_hi), w >= spec.cutout


def training_data(data, spec):
    """
    Effective wind and observed power of the records a constrained model
    is fitted on (records at or above cutout are dropped).
    """

    w_eff, zero = constrain_array(data.wind, spec)
    keep = ~zero
    if not np.any(keep):
        raise DataError(f"no records below cutout to fit {spec.label}")
    return w_eff[keep], data.power[keep]


_model_types = {}


class FittedModel:
    model_class = None

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        if cls.model_class is not None:
            _model_types[cls.model_class] = cls

    def __init__(self, spec, theta, train_mse=None):
        if spec.model_class != self.model_class:
            raise ValueError(
                f"expected spec for {self.model_class.value}, got {spec.model_class.value}")
        self._spec = spec
        self._theta = None if theta is None else np.array(theta, dtype=np.float64)
        self._train_mse = train_mse

    @property
    def spec(self):
        return self._spec

    @property
    def theta(self):
        return self._theta

    @property
    def train_mse(self):
        return self._train_mse

    @property
    def n_params(self):
        raise NotImplementedError()

    @property
    def aux(self):
        return {}

    def with_train_mse(self, train_mse):
        model = self._replace_theta(self._theta)
        model._train_mse = float(train_mse)
        return model

    def _replace_theta(self, theta):
        raise NotImplementedError()

    def perturbed(self, j, delta):
        theta = self._theta.copy()
        theta[j] += delta
        return self._replace_theta(theta)

    def _check_fitted(self):
        if self._theta is None:
            raise FitError(f"{self._spec.label} is not fitted")
        if not np.all(np.isfinite(self._theta)):
            raise FitError(f"{self._spec.label} has non-finite parameters")

    def curve(self, w_eff):
        """
        The unconstrained class formula, evaluated at effective winds.
        """

        raise NotImplementedError()

    def eval(self, w):
        self._check_fitted()
        scalar = np.ndim(w) == 0
        w_eff, zero = constrain_array(np.atleast_1d(w), self._spec)
        p = np.asarray(self.curve(w_eff), dtype=np.float64)
        p = np.where(zero, 0.0, p)
        return float(p[0]) if scalar else p

    def predict(self, data):
        return self.eval(data.wind)

    def to_json(self):
        data = self._spec.to_json()
        data.update({
            'theta': [float(x) for x in self._theta],
            'aux': self.aux,
            'train_mse': self._train_mse,
            'n_params': self.n_params
        })
        return data

    @staticmethod
    def from_json(data):
        spec = ModelSpec.from_json(data)
        cls = _model_types[spec.model_class]
        model = cls._from_json(spec, data['theta'], data.get('aux', {}))
        if data.get('train_mse') is not None:
            model._train_mse = float(data['train_mse'])
        if data.get('n_params') is not None and data['n_params'] != model.n_params:
            raise ValueError(
                f"n_params mismatch for {spec.label}: {data['n_params']} != {model.n_params}")
        return model

    @classmethod
    def _from_json(cls, spec, theta, aux):
        return cls(spec, theta)

    def save(self, path):
        return write_json(path, 'model', self.to_json())

    @staticmethod
    def load(path):
        return FittedModel.from_json(read_json(path, 'model'))


def model_type(model_class):
    return _model_types[ModelClass.parse(model_class)]
