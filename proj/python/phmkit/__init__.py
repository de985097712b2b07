"""phmkit: leakage-safe evaluation runs for multi-unit time series.

The heavy lifting lives in the C++ extension `_phmkit`; this package
re-exports its surface. When installed as a wheel the extension sits inside
the package; during in-tree development it is importable from the CMake
build directory via PYTHONPATH.
"""

try:
    from ._phmkit import *          # noqa: F401,F403  (wheel layout)
    from ._phmkit import __version__  # noqa: F401
except ImportError:                  # pragma: no cover - dev-tree layout
    from _phmkit import *           # noqa: F401,F403
    from _phmkit import __version__  # noqa: F401
