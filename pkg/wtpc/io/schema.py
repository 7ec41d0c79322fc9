import yaml

from pathlib import Path
from wtpc.errors import SchemaError
from wtpc.io.parser import parse_mapping


FIELDS = ('timestamp', 'wind', 'angle', 'temperature', 'power', 'state')


class ColumnName:
    def __init__(self, internal, external=None):
        self._internal = internal
        self._external = external if external else internal

    @property
    def internal(self):
        return self._internal

    @property
    def external(self):
        return self._external


class ScadaSchema:
    def __init__(self, columns=None, delimiter=',', normal_states=('NORMAL',)):
        columns = dict(columns or {})

        unknown = sorted(set(columns.keys()) - set(FIELDS))
        if unknown:
            raise SchemaError(
                f"unknown fields in column mapping: {', '.join(unknown)}")

        self._columns = dict(
            (k, ColumnName(k, columns.get(k))) for k in FIELDS)

        externals = [c.external for c in self._columns.values()]
        if len(set(externals)) != len(externals):
            raise SchemaError(f"column mapping is not one-to-one: {externals}")

        if len(delimiter) != 1:
            raise SchemaError(f"delimiter must be a single character, got '{delimiter}'")
        self._delimiter = delimiter

        if isinstance(normal_states, str):
            normal_states = [normal_states]
        self._normal_states = frozenset(normal_states)
        if not self._normal_states:
            raise SchemaError("at least one normal operation state is needed")

    @staticmethod
    def load(spec):
        if spec is None:
            return ScadaSchema()
        if isinstance(spec, ScadaSchema):
            return spec
        if isinstance(spec, dict):
            return ScadaSchema.from_dict(spec)
        if Path(spec).exists():
            return ScadaSchema.from_yaml(spec)
        try:
            return ScadaSchema(parse_mapping(spec))
        except ValueError as e:
            raise SchemaError(str(e))

    @staticmethod
    def from_dict(data):
        data = dict(data)
        columns = data.pop('columns', {})
        for k in FIELDS:
            if k in data:
                columns[k] = data.pop(k)
        delimiter = data.pop('delimiter', ',')
        normal_states = data.pop('normal_states', ('NORMAL',))
        if data:
            raise SchemaError(f"unsupported schema keys: {', '.join(sorted(data))}")
        return ScadaSchema(columns, delimiter=delimiter, normal_states=normal_states)

    @staticmethod
    def from_yaml(path):
        with open(path, 'r') as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict):
            raise SchemaError(f"expected a mapping in {path}")
        return ScadaSchema.from_dict(data)

    def to_dict(self):
        return {
            'columns': dict((k, c.external) for k, c in self._columns.items()),
            'delimiter': self._delimiter,
            'normal_states': sorted(self._normal_states)
        }

    @property
    def delimiter(self):
        return self._delimiter

    @property
    def normal_states(self):
        return self._normal_states

    def column(self, field):
        return self._columns[field].external

    @property
    def header(self):
        return [self._columns[k].external for k in FIELDS]

    def is_normal(self, state):
        return state in self._normal_states
