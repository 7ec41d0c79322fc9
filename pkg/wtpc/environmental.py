import logging
import numpy as np

from pathlib import Path
from scipy.optimize import minimize_scalar
from wtpc.errors import DataError
from wtpc.io.common import write_json, read_json, artifact_ref, resolve_ref
from wtpc.models import FittedModel


C_PHI_BOUNDS = (0.0, 3.0)

MODES = {
    'none': 'none',
    'angle': 'angle',
    'angle_only': 'angle',
    'temp': 'temp',
    'temp_only': 'temp',
    'both': 'both'
}


def parse_mode(mode):
    try:
        return MODES[str(mode).lower()]
    except KeyError:
        raise ValueError(f"unknown environmental mode '{mode}', expected angle, temp or both")


def angle_factor(phi, c_phi):
    return np.abs(np.cos(np.radians(phi))) ** c_phi


class EnhancedModel:
    """
    Static curve with incidence angle and temperature corrections:
    F(w, phi, T) = S(w |cos phi| ** c_phi) (1 + c_T (T - T_bar)).
    """

    def __init__(self, base, c_phi=0.0, c_T=0.0, T_bar=0.0, mode='both', boundary=False, train_mse=None):
        if not c_phi >= 0:
            raise ValueError(f"c_phi must be nonnegative, is {c_phi}")
        if not np.isfinite(T_bar):
            raise ValueError(f"T_bar must be finite, is {T_bar}")
        self._base = base
        self._c_phi = float(c_phi)
        self._c_T = float(c_T)
        self._T_bar = float(T_bar)
        self._mode = parse_mode(mode)
        self._boundary = bool(boundary)
        self._train_mse = train_mse

    @property
    def base(self):
        return self._base

    @property
    def c_phi(self):
        return self._c_phi

    @property
    def c_T(self):
        return self._c_T

    @property
    def T_bar(self):
        return self._T_bar

    @property
    def mode(self):
        return self._mode

    @property
    def boundary(self):
        return self._boundary

    @property
    def train_mse(self):
        return self._train_mse

    def effective_wind(self, w, phi):
        return np.asarray(w, dtype=np.float64) * angle_factor(phi, self._c_phi)

    def eval_enhanced(self, w, phi, T):
        p = self._base.eval(self.effective_wind(w, phi))
        return p * (1 + self._c_T * (np.asarray(T, dtype=np.float64) - self._T_bar))

    def predict(self, data):
        return self.eval_enhanced(data.wind, data.angle, data.temperature)

    def to_json(self, base_path=None):
        data = {
            'c_phi': self._c_phi,
            'c_T': self._c_T,
            'T_bar': self._T_bar,
            'mode': self._mode,
            'boundary': self._boundary,
            'train_mse': self._train_mse
        }
        if base_path is not None:
            data['base_ref'] = artifact_ref(base_path)
        else:
            data['base'] = self._base.to_json()
        return data

    @staticmethod
    def from_json(data, path=None):
        if 'base_ref' in data:
            base = FittedModel.load(resolve_ref(data['base_ref'], relative_to=path))
        else:
            base = FittedModel.from_json(data['base'])
        return EnhancedModel(
            base, c_phi=data['c_phi'], c_T=data['c_T'], T_bar=data['T_bar'],
            mode=data.get('mode', 'both'), boundary=data.get('boundary', False),
            train_mse=data.get('train_mse'))

    def save(self, path, base_path=None):
        return write_json(path, 'enhanced', self.to_json(base_path=base_path))

    @staticmethod
    def load(path):
        return EnhancedModel.from_json(read_json(path, 'enhanced'), path=Path(path))


class _Objective:
    def __init__(self, base, data, T_bar, estimate_c_T):
        self._base = base
        self._w = data.wind
        self._phi = data.angle
        self._p = data.power
        self._u = data.temperature - T_bar
        self._estimate_c_T = estimate_c_T

    def c_T(self, s):
        if not self._estimate_c_T:
            return 0.0
        su = s * self._u
        denominator = float(np.dot(su, su))
        if denominator == 0:
            return 0.0
        return float(np.dot(su, self._p - s)) / denominator

    def solve(self, c_phi):
        s = self._base.eval(self._w * angle_factor(self._phi, c_phi))
        c_T = self.c_T(s)
        value = float(np.mean((self._p - s * (1 + c_T * self._u)) ** 2))
        return value, c_T

    def __call__(self, c_phi):
        return self.solve(c_phi)[0]


def _minimize_c_phi(objective, extra_candidates=()):
    lo, hi = C_PHI_BOUNDS
    result = minimize_scalar(
        objective, bounds=C_PHI_BOUNDS, method='bounded', options={'xatol': 1e-8})

    best_c, best_value = lo, objective(lo)
    for c in [float(result.x), hi] + list(extra_candidates):
        value = objective(c)
        if value < best_value:
            best_c, best_value = c, value

    h = 1e-4 * (hi - lo)
    boundary = False
    if best_c <= lo + h:
        boundary = objective(lo + h) > best_value
    elif best_c >= hi - h:
        boundary = objective(hi - h) > best_value

    return best_c, best_value, boundary


def fit_environmental(base, data, mode='both'):
    mode = parse_mode(mode)
    data.require_nonempty("training data")

    T_bar = float(np.mean(data.temperature))
    estimate_c_T = mode in ('temp', 'both')
    if estimate_c_T and np.ptp(data.temperature) == 0:
        raise DataError("temperature is constant, c_T is not identifiable")

    boundary = False
    if mode == 'none':
        c_phi = 0.0
        value, c_T = _Objective(base, data, T_bar, False).solve(0.0)
    elif mode == 'temp':
        c_phi = 0.0
        value, c_T = _Objective(base, data, T_bar, True).solve(0.0)
    elif mode == 'angle':
        objective = _Objective(base, data, T_bar, False)
        c_phi, value, boundary = _minimize_c_phi(objective)
        c_T = 0.0
    else:
        angle_only, _, _ = _minimize_c_phi(_Objective(base, data, T_bar, False))
        objective = _Objective(base, data, T_bar, True)
        c_phi, value, boundary = _minimize_c_phi(objective, extra_candidates=[angle_only])
        c_T = objective.solve(c_phi)[1]

    if boundary:
        logging.warning(
            f"environmental fit ({mode}): c_phi={c_phi} is a boundary solution "
            f"of {C_PHI_BOUNDS} with active gradient")

    logging.info(f"environmental fit ({mode}): c_phi={c_phi}, c_T={c_T}, MSE {value}")

    return EnhancedModel(
        base, c_phi=c_phi, c_T=c_T, T_bar=T_bar,
        mode=mode, boundary=boundary, train_mse=value)


def eval_enhanced(model, w, phi, T):
    return model.eval_enhanced(w, phi, T)
