"""trtdb: an embeddable single-node time-series storage engine.

Compressed immutable per-series tables with an out-of-order ingestion
buffer and an aggregate block index, a graph-model query layer, and
analytics for unevenly spaced series.
"""

from .errors import TrtError

__version__ = "0.1.0"

__all__ = ["TrtError", "__version__"]
