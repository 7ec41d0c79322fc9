from .glue import GluedSeries, glue, in_band_mask
from .arma import ArmaModel, fit_arma, forecast_residual
from .model import DynamicModel, Forecast, Exogenous, fit_dynamic, predict_power, batch_forecast
