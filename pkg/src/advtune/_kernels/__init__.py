"""Hot numerical kernels with a compiled core and a numpy fallback.

The Cython extension ``_ckernels`` is used when it has been built;
otherwise (or when ``ADVTUNE_PURE_PYTHON`` is set to a non-empty value
other than ``0``) the pure-Python module ``_pykernels`` is used.
``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels as fallback

try:
    from . import _ckernels as compiled
except ImportError:  # extension not built
    compiled = None

if compiled is not None and os.environ.get("ADVTUNE_PURE_PYTHON", "0") in ("", "0"):
    _impl = compiled
    BACKEND = "cython"
else:
    _impl = fallback
    BACKEND = "python"

overlap_fraction = _impl.overlap_fraction
pair_energy = _impl.pair_energy
gibbs_energy = _impl.gibbs_energy
max_overlap = _impl.max_overlap
paint_labels = _impl.paint_labels
paint_mask = _impl.paint_mask
weighted_kde = _impl.weighted_kde

__all__ = [
    "BACKEND", "compiled", "fallback", "overlap_fraction", "pair_energy",
    "gibbs_energy", "max_overlap", "paint_labels", "paint_mask", "weighted_kde",
]
