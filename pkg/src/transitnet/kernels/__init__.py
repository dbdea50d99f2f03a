"""Hot numeric kernels, dispatched to numba or to the numpy fallback.

``TRANSITNET_NUMBA=0`` selects the fallback. ``get(name)`` returns the
implementation for the active backend; ``get(name, backend)`` picks one
explicitly (used by tests and the benchmark).
"""
from types import SimpleNamespace

from .. import _accel
from . import _numpy

NAMES = ("all_pairs_distances", "brandes", "kmeans_assign", "kmeans_sums", "louvain_local_move")

_impls = {"numpy": SimpleNamespace(**{n: getattr(_numpy, n) for n in NAMES})}
if _accel.NUMBA_AVAILABLE:
    from . import _numba

    _impls["numba"] = SimpleNamespace(**{n: getattr(_numba, n) for n in NAMES})


def available_backends():
    return tuple(_impls)


def get(name, backend=None):
    return getattr(_impls[backend or _accel.backend()], name)


def all_pairs_distances(indptr, indices, weights, sources):
    return get("all_pairs_distances")(indptr, indices, weights, sources)


def brandes(indptr, indices, weights):
    return get("brandes")(indptr, indices, weights)


def kmeans_assign(points, centroids, haversine=False):
    return get("kmeans_assign")(points, centroids, haversine)


def kmeans_sums(points, labels, k):
    return get("kmeans_sums")(points, labels, k)


def louvain_local_move(indptr, indices, weights, strength, community, tot, order, m, resolution, tol, max_passes):
    return get("louvain_local_move")(
        indptr, indices, weights, strength, community, tot, order, m, resolution, tol, max_passes
    )
