import collections
import numpy as np

from wtpc.errors import InsufficientDataError
from wtpc.estimation import wind_keys


class GluedSeries(collections.namedtuple('GluedSeries', ['values', 'segment_starts', 'indices'])):
    """
    In-band rescaled residuals in time order. segment_starts are the
    positions (in values) where excluded records were skipped; indices map
    each value back to its position in the original series.
    """

    def __len__(self):
        return len(self.values)


def in_band_mask(winds, band):
    g_lo, g_hi = band
    keys = wind_keys(winds)
    return (keys >= wind_keys(g_lo)) & (keys <= wind_keys(g_hi))


def glue(r_prime, winds, band, q1=0, q2=0):
    r_prime = np.asarray(r_prime, dtype=np.float64)
    if len(r_prime) != len(winds):
        raise ValueError(f"series not aligned: {len(r_prime)} residuals, {len(winds)} winds")

    indices = np.flatnonzero(in_band_mask(winds, band))
    values = r_prime[indices]
    if not np.all(np.isfinite(values)):
        raise ValueError("glued series contains non-finite values")

    needed = 10 * (q1 + q2 + 1)
    if len(values) < needed:
        raise InsufficientDataError(
            f"insufficient data for dynamic layer: {len(values)} in-band samples, "
            f"ARMA({q1},{q2}) needs {needed}")

    segment_starts = np.flatnonzero(np.diff(indices) > 1) + 1

    return GluedSeries(values, segment_starts, indices)
