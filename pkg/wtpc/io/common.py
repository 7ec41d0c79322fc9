import contextlib
import csv
import hashlib
import math
import shutil
import orjson
import numpy as np

from pathlib import Path
from wtpc.errors import ArtifactError, DataError


FORMAT_VERSION = 1


def to_path(p, suffix):
    p = Path(p)
    if p.suffix == '':
        return p.with_suffix(suffix)
    if p.suffix != suffix:
        raise ValueError(f"expected suffix {suffix}, got {p.suffix}")
    return p


def dumps(data):
    return orjson.dumps(
        data,
        option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY)


def write_json(path, artifact_type, data):
    path = to_path(path, '.json')
    payload = dict(data)
    payload['type'] = artifact_type
    payload['version'] = FORMAT_VERSION
    with open(path, 'wb') as f:
        f.write(dumps(payload))
    return path


def read_json(path, artifact_type=None):
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing artifact {path}")

    with open(path, 'rb') as f:
        data = orjson.loads(f.read())

    if artifact_type is not None:
        if data.get('type') != artifact_type:
            raise ArtifactError(
                f"expected {artifact_type} in {path}, got {data.get('type')}")
        if data.get('version') != FORMAT_VERSION:
            raise ArtifactError(
                f"expected version {FORMAT_VERSION} in {path}, got {data.get('version')}")

    return data


def file_hash_code(path):
    with open(path, 'rb') as f:
        return hashlib.blake2b(f.read(), digest_size=32).hexdigest()


def artifact_ref(path):
    path = Path(path)
    return {
        'path': str(path),
        'hash': file_hash_code(path)
    }


def resolve_ref(ref, relative_to=None):
    path = Path(ref['path'])
    if not path.is_absolute() and relative_to is not None and not path.exists():
        path = Path(relative_to).parent / path.name
    if not path.exists():
        raise ArtifactError(f"referenced artifact {path} does not exist")
    if file_hash_code(path) != ref['hash']:
        raise ArtifactError(f"referenced artifact {path} changed since it was linked")
    return path


def format_value(x):
    if x is None:
        return ''
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return 'nan'
        return repr(x)
    return str(x)


def write_csv(path, header, rows):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(x) for x in row])
    return Path(path)


@contextlib.contextmanager
def open_text(path, mode='r'):
    try:
        f = open(path, mode, newline='')
    except OSError as e:
        raise DataError(f"cannot open {path}: {e.strerror}") from e
    with f:
        yield f


class AbstractWriter:
    def __init__(self, path, exist_ok=True):
        self._path = Path(path)
        self._exist_ok = exist_ok

    @property
    def path(self):
        return self._path

    def _write(self, base_path):
        raise NotImplementedError()

    def write(self):
        base_path = self._path

        created = False
        if base_path.exists():
            if not self._exist_ok:
                raise RuntimeError(f"{base_path} already exists")
        else:
            base_path.mkdir(parents=True)
            created = True

        try:
            return self._write(base_path)
        except:
            if created and base_path.exists():
                shutil.rmtree(base_path)
            raise
