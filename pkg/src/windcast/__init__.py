"""Three-hour-ahead wind speed forecasting from buoy observations.

Two models share one data pipeline: a NARX network (``windcast.narx``) and a
first-order Sugeno ANFIS trained by hybrid least-squares/gradient learning
(``windcast.anfis``). ``windcast.harness`` runs both on identical splits.
"""

from .errors import DataError, NumericalError, WindcastError

__version__ = "0.1.0"

__all__ = ["DataError", "NumericalError", "WindcastError", "__version__"]
