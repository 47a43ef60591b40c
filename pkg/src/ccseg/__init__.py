"""Index-only analytics for Common Crawl style web archives.

The toolkit canonicalizes URIs into index sort keys, performs two-level
ZipNum lookups locally or over HTTP range requests, tabulates per-segment
feature distributions, ranks segments by rank-correlation with the whole
archive, evaluates cross-property proxying, and runs the Last-Modified /
URI-length analyses including single-value anomaly detection.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import CCSegError, DataError, NetworkError, NotFoundError, UsageError

__all__ = [
    "CCSegError",
    "DataError",
    "KERNEL_BACKEND",
    "NetworkError",
    "NotFoundError",
    "UsageError",
    "__version__",
]
