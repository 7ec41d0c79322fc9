import yaml

from pathlib import Path
from wtpc.errors import ArtifactError
from wtpc.io.parser import parse_grid, parse_horizons
from wtpc.io.schema import ScadaSchema
from wtpc.models.core import ModelClass
from wtpc.residuals import CORRECTIONS
from wtpc.selection import DEFAULT_GRIDS


DEFAULTS = {
    'data': None,
    'schema': None,
    'out': None,
    'class': 'spline',
    'grid': None,
    'order': None,
    'mode': 'both',
    'alpha': 0.05,
    'correction': 'bonferroni',
    'q1': 1,
    'q2': 0,
    'horizons': '10,50,100,1000,10000',
    'level': 0.95,
    'seed': 0,
    'n': 10000,
    'iqr_k': 3.0,
    'min_count': 30,
    'delta': 10,
    'workers': 1,
    'steps': None,
    'model': None,
    'enhanced': None,
    'profile': None,
    'dynamic': None,
    'exog': None,
    'validation': None,
    'progress': False
}


class PipelineConfig:
    """
    Settings of one CLI invocation. Values come from the built-in defaults,
    then a flat YAML file, then command-line flags, later sources winning.
    Keys are the flag names with dashes replaced by underscores.
    """

    def __init__(self, values=None):
        values = dict(values or {})
        unknown = sorted(set(values.keys()) - set(DEFAULTS.keys()))
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")

        self._values = dict(DEFAULTS)
        self._values.update(values)

        self._model_class = ModelClass.parse(self._values['class'])

        if not 0 < self._values['alpha'] < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self._values['alpha']}")
        if not 0 < self._values['level'] < 1:
            raise ValueError(f"level must lie in (0, 1), got {self._values['level']}")
        if self._values['correction'] not in CORRECTIONS:
            raise ValueError(
                f"correction must be one of {', '.join(CORRECTIONS)}, got {self._values['correction']}")
        for k in ('q1', 'q2'):
            if int(self._values[k]) < 0:
                raise ValueError(f"{k} must be nonnegative, got {self._values[k]}")

        if not self.grid:
            raise ValueError("order grid is empty")
        if not self.horizons:
            raise ValueError("horizon list is empty")

    @staticmethod
    def from_yaml(path):
        with open(path, 'r') as f:
            data = yaml.safe_load(f)
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ValueError(f"expected a flat key-value mapping in {path}")
        nested = [k for k, v in data.items() if isinstance(v, dict) and k != 'schema']
        if nested:
            raise ValueError(f"configuration must be flat, nested keys: {', '.join(nested)}")
        return dict((str(k).replace('-', '_'), v) for k, v in data.items())

    @staticmethod
    def load(path=None, **flags):
        values = {}
        if path is not None:
            values.update(PipelineConfig.from_yaml(path))
        values.update((k, v) for k, v in flags.items() if v is not None)
        return PipelineConfig(values)

    def __getitem__(self, key):
        return self._values[key]

    def to_dict(self):
        return dict(self._values)

    @property
    def model_class(self):
        return self._model_class

    @property
    def grid(self):
        spec = self._values['grid']
        if spec is None:
            return list(DEFAULT_GRIDS[self._model_class])
        if isinstance(spec, int):
            return [spec]
        return parse_grid(spec)

    @property
    def horizons(self):
        spec = self._values['horizons']
        if isinstance(spec, (int, float)):
            return [float(spec)]
        return parse_horizons(spec)

    @property
    def schema(self):
        return ScadaSchema.load(self._values['schema'])

    @property
    def q1(self):
        return int(self._values['q1'])

    @property
    def q2(self):
        return int(self._values['q2'])

    def input_path(self, key, what=None):
        value = self._values[key]
        what = what or key
        if value is None:
            raise ArtifactError(f"no {what} given (--{key.replace('_', '-')})")
        path = Path(value)
        if not path.exists():
            raise ArtifactError(f"{what} not found: {path}")
        return path

    def output_path(self):
        value = self._values['out']
        if value is None:
            raise ArtifactError("no output location given (--out)")
        return Path(value)
