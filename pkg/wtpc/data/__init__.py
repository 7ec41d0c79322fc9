from .records import ScadaRecord, CleaningReport, CleanDataset
from .cleaning import clean
