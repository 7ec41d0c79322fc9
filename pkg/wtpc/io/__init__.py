from .schema import ScadaSchema
from .scada import ScadaFile, parse_scada, write_scada
