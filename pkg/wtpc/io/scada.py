import collections
import csv
import datetime
import math

from cached_property import cached_property
from pathlib import Path
from tqdm import tqdm

from wtpc.data.records import ScadaRecord
from wtpc.errors import DataError, DuplicateTimestampError, MissingColumnError
from wtpc.io.common import open_text, format_value
from wtpc.io.schema import ScadaSchema, FIELDS


EPOCH = datetime.datetime(1970, 1, 1)


def parse_timestamp(text):
    text = text.strip()
    if text.lstrip('-').isdigit():
        return int(text)
    dt = datetime.datetime.fromisoformat(text.replace('Z', '+00:00'))
    if dt.tzinfo is not None:
        dt = dt.astimezone(datetime.timezone.utc).replace(tzinfo=None)
    return (dt - EPOCH) // datetime.timedelta(minutes=1)


def format_timestamp(minutes):
    return (EPOCH + datetime.timedelta(minutes=int(minutes))).strftime('%Y-%m-%dT%H:%M')


def parse_number(text, decimals=None):
    if text is None:
        return None
    text = text.strip()
    if not text:
        return None
    try:
        x = float(text)
    except ValueError:
        return None
    if not math.isfinite(x):
        return None
    if decimals is not None:
        x = round(x, decimals)
    return x


def parse_wind(text):
    w = parse_number(text, decimals=1)
    if w is not None and w < 0:
        return None
    return w


def parse_state(text):
    if text is None:
        return None
    text = text.strip()
    return text if text else None


class ScadaFile:
    def __init__(self, path, schema=None):
        self._path = Path(path)
        self._schema = ScadaSchema.load(schema)

    @property
    def path(self):
        return self._path

    @property
    def schema(self):
        return self._schema

    @cached_property
    def num_rows(self):
        with open_text(self._path) as f:
            return max(sum(1 for _ in f) - 1, 0)

    def _check_header(self, fieldnames):
        if fieldnames is None:
            raise DataError(f"{self._path} has no header row")
        missing = [c for c in self._schema.header if c not in fieldnames]
        if missing:
            raise MissingColumnError(missing, path=self._path)

    def records(self, progress=False):
        schema = self._schema
        col = dict((k, schema.column(k)) for k in FIELDS)

        records = []
        with open_text(self._path) as f:
            reader = csv.DictReader(f, delimiter=schema.delimiter)
            self._check_header(reader.fieldnames)

            rows = tqdm(
                reader, total=self.num_rows,
                desc=f"reading {self._path.name}", disable=not progress)

            for row in rows:
                line = reader.line_num
                try:
                    timestamp = parse_timestamp(row[col['timestamp']] or '')
                except ValueError:
                    raise DataError(
                        f"{self._path}:{line}: unparseable timestamp "
                        f"'{row[col['timestamp']]}'")

                records.append(ScadaRecord(
                    timestamp=timestamp,
                    wind=parse_wind(row[col['wind']]),
                    angle=parse_number(row[col['angle']]),
                    temperature=parse_number(row[col['temperature']]),
                    power=parse_number(row[col['power']], decimals=1),
                    state=parse_state(row[col['state']])))

        check_timestamps(records, self._path)
        return records


def check_timestamps(records, path=None):
    counts = collections.Counter(r.timestamp for r in records)
    duplicates = sorted(t for t, n in counts.items() if n > 1)
    if duplicates:
        raise DuplicateTimestampError([format_timestamp(t) for t in duplicates])

    for a, b in zip(records, records[1:]):
        if b.timestamp <= a.timestamp:
            where = f"{path}: " if path else ""
            raise DataError(
                f"{where}timestamps not increasing at {format_timestamp(b.timestamp)}")


def parse_scada(path, schema=None, progress=False):
    return ScadaFile(path, schema).records(progress=progress)


def write_scada(path, records, schema=None):
    schema = ScadaSchema.load(schema)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, delimiter=schema.delimiter, lineterminator='\n')
        writer.writerow(schema.header)
        for r in records:
            writer.writerow([format_timestamp(r.timestamp)] + [
                format_value(x) for x in r[1:]])
    return Path(path)
