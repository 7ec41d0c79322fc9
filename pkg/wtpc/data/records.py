import collections
import numpy as np

from cached_property import cached_property
from wtpc.errors import DataError


NORMAL = 'NORMAL'


class ScadaRecord(collections.namedtuple(
        'ScadaRecord', ['timestamp', 'wind', 'angle', 'temperature', 'power', 'state'])):
    """
    One 10-minute SCADA observation. Timestamps are minutes since the
    epoch, wind in m/s, angle in degrees relative to the nacelle,
    temperature in degrees Celsius and power in kW. Any field except the
    timestamp may be None (missing).
    """

    @property
    def complete(self):
        return all(x is not None for x in self)


class CleaningReport(collections.namedtuple(
        'CleaningReport', ['raw', 'na', 'incomplete', 'not_normal', 'outliers', 'retained'])):

    @property
    def na_in_nno(self):
        return self.na + self.incomplete + self.not_normal

    @property
    def discarded(self):
        return self.na_in_nno + self.outliers

    @property
    def proportion(self):
        return proportion(self.retained, self.raw)

    def to_json(self):
        return {
            'raw': self.raw,
            'na': self.na,
            'incomplete': self.incomplete,
            'nno': self.not_normal,
            'na_in_nno': self.na_in_nno,
            'outliers': self.outliers,
            'retained': self.retained,
            'proportion': self.proportion
        }

    @staticmethod
    def from_json(data):
        return CleaningReport(
            raw=data['raw'],
            na=data['na'],
            incomplete=data['incomplete'],
            not_normal=data['nno'],
            outliers=data['outliers'],
            retained=data['retained'])


def proportion(retained, raw):
    if raw <= 0:
        raise DataError("proportion is undefined for an empty record set")
    return retained / raw


class CleanDataset:
    def __init__(self, records, report=None):
        records = list(records)
        for r in records:
            if not r.complete:
                raise DataError(f"incomplete record at timestamp {r.timestamp}")
        self._records = records
        self._report = report

    @staticmethod
    def from_arrays(wind, power, angle=None, temperature=None, timestamps=None,
                    start=0, delta=10, state=NORMAL):
        wind = np.asarray(wind, dtype=np.float64)
        power = np.asarray(power, dtype=np.float64)
        n = len(wind)
        if len(power) != n:
            raise ValueError(f"wind and power differ in length ({n} != {len(power)})")
        if angle is None:
            angle = np.zeros(n)
        if temperature is None:
            temperature = np.full(n, 15.0)
        if timestamps is None:
            timestamps = start + delta * np.arange(n, dtype=np.int64)

        return CleanDataset([
            ScadaRecord(int(t), float(w), float(a), float(tt), float(p), state)
            for t, w, a, tt, p in zip(timestamps, wind, angle, temperature, power)])

    @property
    def records(self):
        return self._records

    @property
    def report(self):
        return self._report

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def _column(self, i, dtype=np.float64):
        return np.array([r[i] for r in self._records], dtype=dtype)

    @cached_property
    def timestamps(self):
        return self._column(0, dtype=np.int64)

    @cached_property
    def wind(self):
        return self._column(1)

    @cached_property
    def angle(self):
        return self._column(2)

    @cached_property
    def temperature(self):
        return self._column(3)

    @cached_property
    def power(self):
        return self._column(4)

    def subset(self, indices):
        indices = np.asarray(indices)
        if indices.dtype == bool:
            indices = np.flatnonzero(indices)
        return CleanDataset([self._records[i] for i in indices])

    def head(self, n):
        return CleanDataset(self._records[:n])

    def require_nonempty(self, what="data"):
        if not self._records:
            raise DataError(f"{what} is empty")
