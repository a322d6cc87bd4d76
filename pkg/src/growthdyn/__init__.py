"""Regional emissions growth dynamics: AEP growth-rate distributions, volatility
scaling and a convergence model estimated by least absolute deviations."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"
