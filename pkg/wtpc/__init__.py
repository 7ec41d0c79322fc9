from wtpc.version import __version__
from wtpc.errors import (
    WtpcError, DataError, SchemaError, FitError, ConvergenceError, BandError,
    InsufficientDataError, ArtifactError)

from wtpc.io import ScadaSchema, ScadaFile, parse_scada, write_scada
from wtpc.data import ScadaRecord, CleaningReport, CleanDataset, clean
from wtpc.models import ModelClass, ModelSpec, FittedModel, fit
from wtpc.estimation import binned_means, mse, mse_lower_bound
from wtpc.selection import bic, select_order, delta
from wtpc.environmental import EnhancedModel, fit_environmental, eval_enhanced
from wtpc.residuals import ResidualProfile, SigmaProfile, analyze_residuals, anderson_darling, gaussian_band
from wtpc.dynamic import ArmaModel, DynamicModel, fit_arma, fit_dynamic, predict_power, glue
from wtpc.evaluation import mse_at_horizon, coverage_audit, evaluate, emit_report
from wtpc.synthetic import GeneratorConfig, GroundTruth, generate
from wtpc.config import PipelineConfig
