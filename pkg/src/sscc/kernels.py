"""Dispatch to the numba or numpy kernel set (see ``_accel``)."""
from ._accel import BACKEND, USE_NUMBA

if USE_NUMBA:
    from ._kernels_numba import (
        center_distances,
        kmeans_lloyd,
        kmeanspp_init,
        nearest_center,
        pairwise_distances,
        pam,
        silhouette,
    )
else:
    from ._kernels_numpy import (  # noqa: F401
        center_distances,
        kmeans_lloyd,
        kmeanspp_init,
        nearest_center,
        pairwise_distances,
        pam,
        silhouette,
    )

__all__ = [
    "BACKEND",
    "center_distances",
    "kmeans_lloyd",
    "kmeanspp_init",
    "nearest_center",
    "pairwise_distances",
    "pam",
    "silhouette",
]
