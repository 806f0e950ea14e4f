"""Self-representation subspace clustering with an unfolded ADMM network.

The package covers the full pipeline: binary/CSV data containers, patch
extraction for hyperspectral cubes, synthetic-data generators, the classic
iterative ADMM solver for the self-representation program, a layer-unfolded
learnable version of the same solver with hand-written reverse-mode
gradients, a small fully-connected autoencoder, joint training, spectral
clustering on the learned coefficients, and clustering metrics.
"""

__version__ = "0.1.0"

from unfold_ssc.errors import ConfigError, DataError, NumericalError

__all__ = ["ConfigError", "DataError", "NumericalError", "__version__"]
