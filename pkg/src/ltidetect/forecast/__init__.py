from ..core import PredictedSequence
from .gru import Adam, GRULayer, gru_cell_forward
from .model import (ForecastModel, NetworkTopology, TrainingConfig, TrainingReport,
                    evaluate_mse, forward, train)
from .naive import SeasonalNaiveForecaster, seasonal_naive_forecast

__all__ = [
    "Adam", "ForecastModel", "GRULayer", "NetworkTopology", "PredictedSequence",
    "SeasonalNaiveForecaster", "TrainingConfig", "TrainingReport", "evaluate_mse",
    "forward", "gru_cell_forward", "seasonal_naive_forecast", "train",
]
