from ..errors import ConfigurationError
from .base import ApproxAllocator, Workload
from .blackscholes import BlackScholes, bs_price, run_blackscholes
from .canny import Canny, canny_reference, run_canny
from .kmeans import KMeans, run_kmeans
from .quality import avg_rel_error, relative_errors, rmse
from .scenes import SceneSpec, file_sequence, option_sequence, read_pnm, scene_sequence, write_pnm
from .synthetic import SyntheticWorkload

WORKLOADS = {
    "canny": Canny,
    "kmeans": KMeans,
    "blackscholes": BlackScholes,
    "synthetic": SyntheticWorkload,
}


def make_workload(name: str, **params) -> Workload:
    try:
        cls = WORKLOADS[name]
    except KeyError:
        raise ConfigurationError(f"unknown workload {name!r}; choose from {sorted(WORKLOADS)}") from None
    return cls(**params)


__all__ = [
    "ApproxAllocator",
    "BlackScholes",
    "Canny",
    "KMeans",
    "SceneSpec",
    "SyntheticWorkload",
    "WORKLOADS",
    "Workload",
    "avg_rel_error",
    "bs_price",
    "canny_reference",
    "file_sequence",
    "make_workload",
    "option_sequence",
    "read_pnm",
    "relative_errors",
    "rmse",
    "run_blackscholes",
    "run_canny",
    "run_kmeans",
    "scene_sequence",
    "write_pnm",
]
