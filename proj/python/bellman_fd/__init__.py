"""Monotone finite-difference solvers for Bellman equations."""

try:
    from ._bellman_fd import (  # noqa: F401
        Delta_h,
        catalog_blurb,
        catalog_names,
        delta_h,
        delta_tau_T,
        shake_gap,
        solve,
        study,
    )
except ImportError:  # extension on sys.path directly (build-tree runs)
    from _bellman_fd import (  # noqa: F401
        Delta_h,
        catalog_blurb,
        catalog_names,
        delta_h,
        delta_tau_T,
        shake_gap,
        solve,
        study,
    )

__all__ = [
    "Delta_h",
    "catalog_blurb",
    "catalog_names",
    "delta_h",
    "delta_tau_T",
    "shake_gap",
    "solve",
    "study",
]
