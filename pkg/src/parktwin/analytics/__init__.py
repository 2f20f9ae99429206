"""Streaming analytics: live occupancy aggregates and hour-of-day forecasts."""

from parktwin.analytics.occupancy import OccupancySnapshot, OccupancyTracker
from parktwin.analytics.forecast import ForecastModel, forecast, train

__all__ = [
    "OccupancySnapshot",
    "OccupancyTracker",
    "ForecastModel",
    "forecast",
    "train",
]
