"""Split-scan kernels for tree fitting.

Two interchangeable backends: a Cython extension (built by setup.py) and
a pure-numpy fallback. Both scan boundaries of a feature pre-sorted
ascending and must return bit-identical results; parity is enforced by
tests. Set SEPSISKIT_PURE_PYTHON=1 to force the fallback.
"""

import os

from . import _split_py

BACKEND = "python"

if not os.environ.get("SEPSISKIT_PURE_PYTHON"):
    try:
        from ._split_cy import scan_gini, scan_grad  # noqa: F401

        BACKEND = "compiled"
    except ImportError:
        from ._split_py import scan_gini, scan_grad  # noqa: F401
else:
    from ._split_py import scan_gini, scan_grad  # noqa: F401

__all__ = ["scan_gini", "scan_grad", "BACKEND"]
