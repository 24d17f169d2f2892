"""Shortest-path kernel backend selection.

Prefers the compiled extension; falls back to the pure-Python
implementation when the extension is unavailable or when the
environment variable MRPP_PURE is set (useful for benchmarking and
for verifying backend equivalence).
"""

import os

if os.environ.get("MRPP_PURE"):
    from . import pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _cyroute as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import pure as _impl

        BACKEND = "pure"

dijkstra_csr = _impl.dijkstra_csr

__all__ = ["dijkstra_csr", "BACKEND"]
