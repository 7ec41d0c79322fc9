import collections
import logging
import numpy as np

from scipy.signal import lfilter

from pathlib import Path
from typing import NamedTuple, Optional, Tuple
from wtpc.data.records import ScadaRecord, CleanDataset, NORMAL
from wtpc.dynamic.arma import ArmaModel
from wtpc.dynamic.model import DynamicModel
from wtpc.environmental import EnhancedModel
from wtpc.estimation import wind_keys, key_to_wind
from wtpc.io.common import AbstractWriter, write_json, read_json
from wtpc.io.scada import write_scada, parse_scada
from wtpc.models import BSpline, FittedModel, ModelSpec
from wtpc.residuals import ResidualProfile, SigmaProfile


REFERENCE_ALPHA = [
    -8.0336698, -7.2559215, -23.865741, 78.529492, 156.55003, 272.98557,
    452.80144, 690.69908, 1022.923, 1400.7208, 1721.1444, 1921.2212,
    1998.4378, 1992.549, 2005.308, 1997.8069, 2000.3969]

REFERENCE_KNOTS = [3.5] * 4 + [
    4.4247, 5.2668, 5.9855, 6.7569, 7.6994, 8.6481, 9.7265,
    10.8994, 11.6831, 12.3575, 12.9990, 13.6470, 14.3235] + [15.0] * 4

SEASON_MINUTES = 365 * 24 * 60
START_2013 = 15706 * 24 * 60
NOT_NORMAL = 'STOP'


def reference_curve():
    """
    A 17-coefficient cubic spline of a 2 MW turbine, used as the default
    true curve.
    """

    return BSpline(ModelSpec('spline', 17), REFERENCE_ALPHA, knots=REFERENCE_KNOTS)


class GeneratorConfig(NamedTuple):
    seed: int = 0
    n_samples: int = 10000
    true_curve: Optional[FittedModel] = None
    c_phi_true: float = 1.0
    c_T_true: float = -0.005
    band: Tuple[float, float] = (5.0, 14.0)
    sigma_floor: float = 2.0
    sigma_peak: float = 20.0
    sigma_outside: float = 2.0
    outside_shape: str = 'gaussian'
    arma_a: Tuple[float, ...] = (0.5,)
    arma_c: Tuple[float, ...] = ()
    wind_median: float = 8.0
    wind_log_sd: float = 0.45
    wind_persistence: float = 0.98
    wind_bounds: Tuple[float, float] = (0.0, 30.0)
    temp_mean: float = 10.0
    temp_seasonal: float = 8.0
    temp_daily: float = 3.0
    temp_noise: float = 0.5
    angle_sd: float = 8.0
    start: int = START_2013
    delta: int = 10
    n_missing: int = 0
    n_incomplete: int = 0
    n_nno: int = 0
    n_outliers: int = 0
    outlier_offset: float = 3000.0

    def validate(self):
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be at least 2, is {self.n_samples}")
        if min(self.sigma_floor, self.sigma_peak, self.sigma_outside) < 0:
            raise ValueError("residual scales must be nonnegative")
        if self.sigma_floor == 0 and self.sigma_peak > 0:
            raise ValueError("sigma_floor must be positive when sigma_peak is")
        if self.outside_shape not in ('gaussian', 'binary'):
            raise ValueError(f"unknown outside shape '{self.outside_shape}'")
        if not self.band[0] < self.band[1]:
            raise ValueError(f"band bounds must increase, got {self.band}")
        arma = ArmaModel(self.arma_a, self.arma_c)
        if not (arma.is_stable and arma.is_invertible):
            raise ValueError(
                f"true ARMA a={self.arma_a}, c={self.arma_c} is not stable and invertible")


class GroundTruth:
    def __init__(self, curve, c_phi, c_T, T_bar, band, sigma_floor, sigma_peak, sigma_outside,
                 outside_shape, arma, injected=None, seed=None):
        self._curve = curve
        self._c_phi = float(c_phi)
        self._c_T = float(c_T)
        self._T_bar = float(T_bar)
        self._band = (float(band[0]), float(band[1]))
        self._sigma_floor = float(sigma_floor)
        self._sigma_peak = float(sigma_peak)
        self._sigma_outside = float(sigma_outside)
        self._outside_shape = outside_shape
        self._arma = arma
        self._injected = dict(injected or {})
        self._seed = seed

    @property
    def curve(self):
        return self._curve

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
    def band(self):
        return self._band

    @property
    def arma(self):
        return self._arma

    @property
    def injected(self):
        return self._injected

    @property
    def sigma_outside(self):
        return self._sigma_outside

    def in_band(self, w):
        keys = wind_keys(w)
        return (keys >= wind_keys(self._band[0])) & (keys <= wind_keys(self._band[1]))

    def sigma(self, w):
        w = np.asarray(w, dtype=np.float64)
        lo, hi = self._band
        bump = self._sigma_floor + self._sigma_peak * np.sin(np.pi * (w - lo) / (hi - lo)) ** 2
        return np.where(self.in_band(w), bump, self._sigma_outside)

    def enhanced_model(self):
        return EnhancedModel(
            self._curve, c_phi=self._c_phi, c_T=self._c_T, T_bar=self._T_bar, mode='both')

    def residual_profile(self, alpha=0.05):
        keys = np.arange(0, 301)
        return ResidualProfile(
            SigmaProfile(keys, self.sigma(key_to_wind(keys)), np.zeros(len(keys), dtype=np.int64)),
            self._band[0], self._band[1], {}, alpha)

    def dynamic_model(self):
        return DynamicModel(
            self.enhanced_model(), self.residual_profile(), self._arma, self._sigma_outside ** 2)

    def rescaled_residuals(self, data):
        if not isinstance(data, CleanDataset):
            data = CleanDataset(data)
        r = data.power - self.enhanced_model().predict(data)
        return r / self.sigma(data.wind)

    def to_json(self):
        return {
            'curve': self._curve.to_json(),
            'c_phi': self._c_phi,
            'c_T': self._c_T,
            'T_bar': self._T_bar,
            'band': list(self._band),
            'sigma': {
                'floor': self._sigma_floor,
                'peak': self._sigma_peak,
                'outside': self._sigma_outside,
                'outside_shape': self._outside_shape
            },
            'arma': self._arma.to_json(),
            'injected': self._injected,
            'seed': self._seed
        }

    @staticmethod
    def from_json(data):
        sigma = data['sigma']
        return GroundTruth(
            FittedModel.from_json(data['curve']),
            data['c_phi'], data['c_T'], data['T_bar'], data['band'],
            sigma['floor'], sigma['peak'], sigma['outside'], sigma['outside_shape'],
            ArmaModel.from_json(data['arma']),
            injected=data.get('injected'), seed=data.get('seed'))

    def save(self, path):
        return write_json(path, 'truth', self.to_json())

    @staticmethod
    def load(path):
        return GroundTruth.from_json(read_json(path, 'truth'))


class Corpus(collections.namedtuple('Corpus', ['train', 'validation', 'truth'])):
    pass


class Season(collections.namedtuple('Season', ['timestamps', 'wind', 'angle', 'temperature'])):
    pass


def _season(config, rng, start):
    n = config.n_samples
    timestamps = start + config.delta * np.arange(n, dtype=np.int64)

    phi = config.wind_persistence
    z0 = rng.standard_normal() * config.wind_log_sd
    innovations = rng.standard_normal(n) * config.wind_log_sd * np.sqrt(1 - phi ** 2)
    z = lfilter([1.0], [1.0, -phi], innovations, zi=[phi * z0])[0]
    wind = np.clip(config.wind_median * np.exp(z), *config.wind_bounds)
    wind = np.round(wind, 1)

    angle = np.clip(np.round(rng.standard_normal(n) * config.angle_sd, 1), -180, 180)

    days = (timestamps - START_2013) / (24 * 60)
    temperature = (
        config.temp_mean
        - config.temp_seasonal * np.cos(2 * np.pi * days / 365)
        - config.temp_daily * np.cos(2 * np.pi * days)
        + config.temp_noise * rng.standard_normal(n))
    temperature = np.round(temperature, 1)

    return Season(timestamps, wind, angle, temperature)


def _power(truth, config, season, rng):
    F = truth.enhanced_model().eval_enhanced(season.wind, season.angle, season.temperature)
    in_band = truth.in_band(season.wind)

    r_prime = np.empty(len(F))
    r_prime[in_band] = truth.arma.simulate(int(np.sum(in_band)), rng)
    n_out = int(np.sum(~in_band))
    if config.outside_shape == 'binary':
        r_prime[~in_band] = rng.choice([-1.0, 1.0], size=n_out)
    else:
        r_prime[~in_band] = rng.standard_normal(n_out)

    return np.round(F + truth.sigma(season.wind) * r_prime, 1)


def _records(season, power):
    return [
        ScadaRecord(int(t), float(w), float(a), float(tt), float(p), NORMAL)
        for t, w, a, tt, p in zip(
            season.timestamps, season.wind, season.angle, season.temperature, power)]


def inject_defects(records, config, rng, min_group=20):
    """
    Marks disjoint sets of records as missing (removed), incomplete,
    not-normal or outlying. Returns the defective records and the counts.
    """

    n = len(records)
    n_flagged = config.n_missing + config.n_incomplete + config.n_nno
    if n_flagged > n - 2:
        raise ValueError(f"cannot inject {n_flagged} defects into {n} records")

    chosen = rng.choice(np.arange(1, n - 1), size=n_flagged, replace=False)
    missing = set(chosen[:config.n_missing].tolist())
    incomplete = chosen[config.n_missing:config.n_missing + config.n_incomplete]
    nno = chosen[config.n_missing + config.n_incomplete:]

    records = list(records)
    for i in incomplete:
        field = int(rng.integers(1, 6))
        values = list(records[i])
        values[field] = None
        records[i] = ScadaRecord(*values)
    for i in nno:
        records[i] = records[i]._replace(state=NOT_NORMAL)

    flagged = set(chosen.tolist())
    groups = collections.defaultdict(list)
    for i, r in enumerate(records):
        if i not in flagged:
            groups[wind_keys(r.wind).item()].append(i)
    eligible = sorted(k for k, v in groups.items() if len(v) >= min_group)
    if config.n_outliers > len(eligible):
        raise ValueError(
            f"cannot inject {config.n_outliers} outliers, only {len(eligible)} wind groups qualify")
    for k in rng.choice(eligible, size=config.n_outliers, replace=False):
        i = int(rng.choice(groups[int(k)]))
        records[i] = records[i]._replace(
            power=round(records[i].power + config.outlier_offset, 1))

    records = [r for i, r in enumerate(records) if i not in missing]

    return records, {
        'na': config.n_missing,
        'incomplete': config.n_incomplete,
        'nno': config.n_nno,
        'outliers': config.n_outliers
    }


def generate(config=None):
    config = config or GeneratorConfig()
    config.validate()

    rng = np.random.default_rng(config.seed)
    curve = config.true_curve or reference_curve()
    arma = ArmaModel(config.arma_a, config.arma_c).with_unit_variance()

    train_season = _season(config, rng, config.start)
    validation_season = _season(config, rng, config.start + SEASON_MINUTES)

    truth = GroundTruth(
        curve, config.c_phi_true, config.c_T_true, float(np.mean(train_season.temperature)),
        config.band, config.sigma_floor, config.sigma_peak, config.sigma_outside,
        config.outside_shape, arma, seed=config.seed)

    train = _records(train_season, _power(truth, config, train_season, rng))
    validation = _records(validation_season, _power(truth, config, validation_season, rng))

    train, injected = inject_defects(train, config, rng)
    truth._injected = injected

    logging.info(
        f"generated {len(train)} training and {len(validation)} validation records "
        f"(seed {config.seed})")

    return Corpus(train, validation, truth)


class CorpusWriter(AbstractWriter):
    def __init__(self, path, corpus, exist_ok=True):
        super().__init__(path, exist_ok=exist_ok)
        self._corpus = corpus

    def _write(self, base_path):
        return [
            write_scada(base_path / 'train.csv', self._corpus.train),
            write_scada(base_path / 'validation.csv', self._corpus.validation),
            self._corpus.truth.save(base_path / 'truth.json')]


def write_corpus(path, corpus):
    return CorpusWriter(path, corpus).write()


def read_corpus(path):
    path = Path(path)
    return Corpus(
        parse_scada(path / 'train.csv'),
        parse_scada(path / 'validation.csv'),
        GroundTruth.load(path / 'truth.json'))
