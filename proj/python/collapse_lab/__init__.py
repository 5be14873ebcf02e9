"""Python surface of the collapse-lab core.

Everything heavy lives in the compiled ``_core`` module; this package only
re-exports it. The module is found either inside the installed package or on
the path next to a build tree.
"""

try:
    from ._core import *  # noqa: F401,F403
    from . import _core as _core  # noqa: F401
except ImportError:
    from _core import *  # noqa: F401,F403
    import _core as _core  # noqa: F401

__version__ = "0.1.0"

__all__ = [
    "Rng",
    "Dataset",
    "FeatureTable",
    "ConfigError",
    "NumericError",
    "IoError",
    "gaussian_toy",
    "longtail_counts",
    "longtail_subsample",
    "apply_coarse",
    "am_lambda",
    "alignment",
    "sphere_centroids",
    "uniformity",
    "neighborhood_uniformity",
    "default_config",
    "check_config",
    "train_from_config",
]
