"""Backend dispatch for the hot loops.

The compiled (numba) kernels are used by default. Set ``GIBBSGRAPH_BACKEND=numpy``
to run the pure numpy fallback instead; both modules expose the same functions.
"""
import os

from . import _numpy_kernels as numpy_impl

try:
    from . import _numba_kernels as numba_impl
except ImportError:  # numba missing
    numba_impl = None

W_ZERO = numpy_impl.W_ZERO
W_BILINEAR = numpy_impl.W_BILINEAR
W_GRADIENT = numpy_impl.W_GRADIENT
W_BIQUADRATIC = numpy_impl.W_BIQUADRATIC
SAMPLER_GRID = numpy_impl.SAMPLER_GRID


def _select(name):
    if name == "numpy" or numba_impl is None:
        return "numpy", numpy_impl
    if name == "numba":
        return "numba", numba_impl
    raise ValueError(f"unknown GIBBSGRAPH_BACKEND {name!r} (expected 'numba' or 'numpy')")


BACKEND, _impl = _select(os.environ.get("GIBBSGRAPH_BACKEND", "numba").lower())

bfs = _impl.bfs
path_census = _impl.path_census
growth_scan = _impl.growth_scan
sample_site = _impl.sample_site
heat_bath = _impl.heat_bath


def get(name):
    """Kernel module for an explicit backend name."""
    return _select(name)[1]
