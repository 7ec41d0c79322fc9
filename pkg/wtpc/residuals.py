import logging
import numpy as np

from scipy.special import log_ndtr
from wtpc.errors import DataError, BandError, NoGaussianBandError
from wtpc.estimation import wind_keys, key_to_wind
from wtpc.io.common import write_csv
from wtpc.models.core import W_LO, W_HI


MIN_SIGMA_COUNT = 30
MIN_AD_SAMPLES = 8
DEFAULT_ALPHA = 0.05
CORRECTIONS = ('bonferroni', 'none')
DEFAULT_CORRECTION = 'bonferroni'


def residuals(model, data):
    return data.power - model.predict(data)


class SigmaProfile:
    """
    Wind-conditional residual scale on the 0.1 m/s grid. Bins with fewer
    than min_count residuals take their value by linear interpolation
    between populated bins.
    """

    def __init__(self, keys, sigma, counts, min_count=MIN_SIGMA_COUNT):
        self._keys = np.asarray(keys, dtype=np.int64)
        self._sigma = np.asarray(sigma, dtype=np.float64)
        self._counts = np.asarray(counts, dtype=np.int64)
        self._min_count = min_count
        self._winds = key_to_wind(self._keys)

    @staticmethod
    def compute(r, winds, min_count=MIN_SIGMA_COUNT):
        r = np.asarray(r, dtype=np.float64)
        if len(r) == 0:
            raise DataError("cannot estimate a residual profile from an empty series")

        keys, inverse, counts = np.unique(
            wind_keys(winds), return_inverse=True, return_counts=True)
        sigma = np.sqrt(np.bincount(inverse, weights=r ** 2) / counts)

        populated = counts >= min_count
        if not np.any(populated):
            populated = counts >= 2
            if not np.any(populated):
                raise DataError("no wind bin has enough residuals for a profile")
            logging.warning(
                f"no wind bin reaches {min_count} residuals, using bins with at least 2")

        sparse = ~populated
        if np.any(sparse):
            logging.info(f"interpolating sigma for {int(np.sum(sparse))} sparse wind bins")
            x = key_to_wind(keys)
            sigma = sigma.copy()
            sigma[sparse] = np.interp(x[sparse], x[populated], sigma[populated])

        return SigmaProfile(keys, sigma, counts, min_count=min_count)

    @property
    def winds(self):
        return self._winds

    @property
    def sigma(self):
        return self._sigma

    @property
    def counts(self):
        return self._counts

    def at(self, w):
        scalar = np.ndim(w) == 0
        w = np.atleast_1d(np.asarray(w, dtype=np.float64))
        keys = wind_keys(w)
        i = np.clip(np.searchsorted(self._keys, keys), 0, len(self._keys) - 1)
        exact = self._keys[i] == keys
        s = np.where(exact, self._sigma[i], np.interp(w, self._winds, self._sigma))
        return float(s[0]) if scalar else s

    def to_dict(self):
        return dict(zip(self._winds.tolist(), self._sigma.tolist()))

    def to_json(self):
        return {
            'wind': self._winds.tolist(),
            'sigma': self._sigma.tolist(),
            'n': self._counts.tolist(),
            'min_count': self._min_count
        }

    @staticmethod
    def from_json(data):
        return SigmaProfile(
            wind_keys(data['wind']), data['sigma'], data['n'],
            min_count=data.get('min_count', MIN_SIGMA_COUNT))


def sigma_profile(r, data, min_count=MIN_SIGMA_COUNT):
    return SigmaProfile.compute(r, data.wind, min_count=min_count)


def rescale(r, sigma, winds):
    s = sigma.at(winds)
    zero = np.atleast_1d(s) == 0
    if np.any(zero):
        w = np.atleast_1d(np.asarray(winds, dtype=np.float64))[zero]
        bins, counts = np.unique(wind_keys(w), return_counts=True)
        listed = ", ".join(f"{k / 10:.1f} ({n} records)" for k, n in zip(bins[:10], counts[:10]))
        more = "" if len(bins) <= 10 else f" and {len(bins) - 10} more"
        raise DataError(f"sigma is zero in wind bins {listed}{more}, cannot rescale")
    return np.asarray(r, dtype=np.float64) / s


def ad_pvalue(a2):
    """
    Asymptotic p-value of the case-0 Anderson-Darling statistic
    (Marsaglia & Marsaglia approximation of the limiting distribution).
    """

    z = float(a2)
    if z <= 0:
        return 1.0
    if z < 2:
        cdf = np.exp(-1.2337141 / z) / np.sqrt(z) * (
            2.00012 + (.247105 - (.0649821 - (.0347962 - (.0116720 - .00168691 * z) * z) * z) * z) * z)
        return float(min(max(1 - cdf, 0.0), 1.0))
    f = 1.0776 - (2.30695 - (.43424 - (.082433 - (.008056 - .0003146 * z) * z) * z) * z) * z
    return float(-np.expm1(-np.exp(f)))


def anderson_darling(samples):
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    if n < MIN_AD_SAMPLES:
        raise ValueError(f"Anderson-Darling needs at least {MIN_AD_SAMPLES} samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("Anderson-Darling samples must be finite")

    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (log_ndtr(x) + log_ndtr(-x[::-1])))
    a2 = float(-n - s / n)
    return a2, ad_pvalue(a2)


def band_pvalues(r_prime, winds, min_samples=MIN_AD_SAMPLES):
    """
    Per wind bin (key in tenths of m/s): (n, p-value), with p NaN for bins
    too small to test.
    """

    r_prime = np.asarray(r_prime, dtype=np.float64)
    keys = wind_keys(winds)
    order = np.argsort(keys, kind='stable')
    keys, r_prime = keys[order], r_prime[order]
    unique, starts = np.unique(keys, return_index=True)
    ends = np.append(starts[1:], len(keys))

    result = {}
    for k, a, b in zip(unique, starts, ends):
        n = b - a
        p = anderson_darling(r_prime[a:b])[1] if n >= min_samples else float('nan')
        result[int(k)] = (int(n), p)
    return result


def longest_run(keys, passing):
    best = None
    start = None
    for k, ok in zip(keys, passing):
        if ok and start is None:
            start = k
        if ok:
            if best is None or k - start > best[1] - best[0]:
                best = (start, k)
        else:
            start = None
    return best


def band_threshold(pvalues, alpha, correction=DEFAULT_CORRECTION, w_lo=W_LO, w_hi=W_HI,
                   min_samples=MIN_AD_SAMPLES):
    """
    Per-bin p-value threshold. With the Bonferroni correction alpha is
    divided by the number of bins tested between w_lo and w_hi.
    """

    if correction not in CORRECTIONS:
        raise ValueError(f"unknown correction '{correction}', expected one of {', '.join(CORRECTIONS)}")
    if correction == 'none':
        return alpha

    lo, hi = int(round(w_lo * 10)), int(round(w_hi * 10))
    tested = sum(1 for k, (n, p) in pvalues.items() if lo <= k <= hi and n >= min_samples)
    return alpha / max(tested, 1)


def gaussian_band(r_prime, winds, alpha=DEFAULT_ALPHA, w_lo=W_LO, w_hi=W_HI,
                  min_samples=MIN_AD_SAMPLES, pvalues=None, correction=DEFAULT_CORRECTION):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), is {alpha}")

    if pvalues is None:
        pvalues = band_pvalues(r_prime, winds, min_samples=min_samples)

    threshold = band_threshold(
        pvalues, alpha, correction=correction, w_lo=w_lo, w_hi=w_hi, min_samples=min_samples)
    logging.debug(f"per-bin normality threshold {threshold:.3g} ({correction})")

    grid = range(int(round(w_lo * 10)), int(round(w_hi * 10)) + 1)
    passing = []
    for k in grid:
        n, p = pvalues.get(k, (0, float('nan')))
        passing.append(n >= min_samples and p >= threshold)

    run = longest_run(list(grid), passing)
    if run is None:
        raise NoGaussianBandError(alpha)
    if run[0] == run[1]:
        raise BandError(
            f"Gaussian band at level alpha={alpha} is the single bin {run[0] / 10:.1f}")

    return run[0] / 10, run[1] / 10


class ResidualProfile:
    def __init__(self, sigma, g_lo, g_hi, ad_pvalues, alpha, residual_std=None,
                 correction=DEFAULT_CORRECTION):
        if not g_lo < g_hi:
            raise ValueError(f"expected g_lo < g_hi, got {g_lo}, {g_hi}")
        self._sigma = sigma
        self._g_lo = float(g_lo)
        self._g_hi = float(g_hi)
        self._ad_pvalues = dict(ad_pvalues)
        self._alpha = float(alpha)
        self._residual_std = residual_std
        self._correction = correction

    @property
    def sigma(self):
        return self._sigma

    @property
    def g_lo(self):
        return self._g_lo

    @property
    def g_hi(self):
        return self._g_hi

    @property
    def band(self):
        return self._g_lo, self._g_hi

    @property
    def ad_pvalues(self):
        return self._ad_pvalues

    @property
    def alpha(self):
        return self._alpha

    @property
    def residual_std(self):
        return self._residual_std

    @property
    def correction(self):
        return self._correction

    def in_band(self, w):
        keys = wind_keys(w)
        return (keys >= wind_keys(self._g_lo)) & (keys <= wind_keys(self._g_hi))

    def rescale(self, r, winds):
        return rescale(r, self._sigma, winds)

    def to_json(self):
        return {
            'sigma': self._sigma.to_json(),
            'g_lo': self._g_lo,
            'g_hi': self._g_hi,
            'ad': dict(
                (f"{k / 10:.1f}", {'n': n, 'p': None if np.isnan(p) else p})
                for k, (n, p) in sorted(self._ad_pvalues.items())),
            'alpha': self._alpha,
            'correction': self._correction,
            'residual_std': self._residual_std
        }

    @staticmethod
    def from_json(data):
        ad = dict(
            (int(wind_keys(float(w))), (v['n'], float('nan') if v['p'] is None else v['p']))
            for w, v in data['ad'].items())
        return ResidualProfile(
            SigmaProfile.from_json(data['sigma']),
            data['g_lo'], data['g_hi'], ad, data['alpha'],
            residual_std=data.get('residual_std'),
            correction=data.get('correction', DEFAULT_CORRECTION))

    def write_csv(self, path):
        rows = []
        for w, s, n in zip(self._sigma.winds, self._sigma.sigma, self._sigma.counts):
            _, p = self._ad_pvalues.get(int(wind_keys(w)), (0, float('nan')))
            rows.append((w, s, n, p))
        return write_csv(path, ['wind', 'sigma', 'n', 'ad_p'], rows)


def histogram_rows(r_prime, winds, edges=None):
    if edges is None:
        edges = np.linspace(-4, 4, 33)
    keys = wind_keys(winds)
    r_prime = np.asarray(r_prime, dtype=np.float64)
    for k in np.unique(keys):
        counts, _ = np.histogram(r_prime[keys == k], bins=edges)
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            yield k / 10, lo, hi, int(c)


def write_histogram_csv(path, r_prime, winds, edges=None):
    return write_csv(path, ['wind', 'lo', 'hi', 'count'], histogram_rows(r_prime, winds, edges))


def analyze_residuals(model, data, alpha=DEFAULT_ALPHA, min_count=MIN_SIGMA_COUNT, band=None,
                      correction=DEFAULT_CORRECTION):
    """
    Residual scale profile, per-bin normality p-values and Gaussian band of
    model on data. A given band overrides the detected one.
    """

    data.require_nonempty()
    r = residuals(model, data)
    sigma = sigma_profile(r, data, min_count=min_count)
    r_prime = rescale(r, sigma, data.wind)
    pvalues = band_pvalues(r_prime, data.wind)

    if band is None:
        g_lo, g_hi = gaussian_band(
            r_prime, data.wind, alpha=alpha, pvalues=pvalues, correction=correction)
    else:
        g_lo, g_hi = band

    logging.info(f"Gaussian band at alpha={alpha} ({correction}): [{g_lo}, {g_hi}]")

    return ResidualProfile(
        sigma, g_lo, g_hi, pvalues, alpha,
        residual_std=float(np.sqrt(np.mean(r ** 2))), correction=correction)
