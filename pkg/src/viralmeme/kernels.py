"""Backend selection for the hot kernels.

The compiled extension is used when importable; ``VIRALMEME_PURE=1`` forces
the pure-Python fallback. ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels as pure

compiled = None
if not os.environ.get("VIRALMEME_PURE"):
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

bfs = _impl.bfs
multi_source_bfs = _impl.multi_source_bfs
pairwise_distances = _impl.pairwise_distances
grow_tree = _impl.grow_tree
forest_votes = _impl.forest_votes

__all__ = [
    "BACKEND",
    "bfs",
    "multi_source_bfs",
    "pairwise_distances",
    "grow_tree",
    "forest_votes",
    "compiled",
    "pure",
]
