"""Kernel dispatch: the compiled extension when importable, else pure Python."""

from . import _kernels_py as python_kernels

try:
    from . import _kernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

_active = compiled_kernels if compiled_kernels is not None else python_kernels

IMPLEMENTATION = _active.IMPLEMENTATION

subset_convolve = _active.subset_convolve
subset_inverse = _active.subset_inverse
connected_from_psi = _active.connected_from_psi
occupation_connected = _active.occupation_connected
box_partition_graded = _active.box_partition_graded
