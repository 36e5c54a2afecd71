"""Station-network air quality forecasting.

Builds distance- and altitude-gated directed graphs over observation
stations, derives time-varying edge weights from wind fields, learns
additional per-edge weights as model parameters, and forecasts
station-level PM2.5 with directed message passing feeding a gated
recurrence. Ships with training, a historical-average baseline, a
synthetic advection generator for end-to-end validation, and network
analysis of the learned edge weights.
"""

__version__ = "0.1.0"
