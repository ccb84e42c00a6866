"""Polynomial arithmetic, BFV kernels, and a processing-in-memory model."""

try:
    from ._core import *  # noqa: F401,F403  (installed wheel layout)
    from ._core import __version__  # noqa: F401
except ImportError:  # in-tree build: _core sits next to us on sys.path
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
