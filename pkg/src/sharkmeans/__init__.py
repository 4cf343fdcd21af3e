"""Feature-weighted k-means: SHARK (Shapley reweighted k-means) and baselines."""

__version__ = "0.1.0"

from .baselines import LwParams, run_fwsa, run_lw
from .core import range_normalize, zscore_normalize
from .lloyd import ClusterModel, InitMethod, run_kmeans
from .metrics import ari
from .shark import run_shark, shapley_closed_form

__all__ = [
    "ClusterModel",
    "InitMethod",
    "LwParams",
    "ari",
    "range_normalize",
    "run_fwsa",
    "run_kmeans",
    "run_lw",
    "run_shark",
    "shapley_closed_form",
    "zscore_normalize",
    "__version__",
]
