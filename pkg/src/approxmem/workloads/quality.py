"""Quality monitors comparing an approximate result against the golden one."""

import numpy as np

from ..errors import DomainError

RMSE_MAX = 255.0
REL_ERROR_MAX = 100.0


def rmse(golden: np.ndarray, approx: np.ndarray) -> float:
    """Root of the mean squared per-pixel (per-channel) difference, in pixel units."""
    golden = np.asarray(golden)
    approx = np.asarray(approx)
    if golden.shape != approx.shape:
        raise DomainError(f"shape mismatch: {golden.shape} vs {approx.shape}")
    diff = golden.astype(np.float64) - approx.astype(np.float64)
    return float(np.sqrt(np.mean(diff * diff)))


def relative_errors(golden, approx) -> np.ndarray:
    """Per-entry ``|g - a| / |g|`` saturated at 1; NaN/Inf and ``g == 0 != a`` count as 1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.asarray(golden, dtype=np.float64)
        a = np.asarray(approx, dtype=np.float64)
    if g.shape != a.shape:
        raise DomainError(f"length mismatch: {g.shape} vs {a.shape}")
    with np.errstate(divide="ignore", invalid="ignore"):
        err = np.abs(g - a) / np.abs(g)
    err = np.where(g == a, 0.0, err)
    err = np.where(np.isfinite(err), err, 1.0)
    return np.minimum(err, 1.0)


def avg_rel_error(golden, approx) -> float:
    """Mean saturated relative error, in percent."""
    err = relative_errors(golden, approx)
    return float(100.0 * err.mean()) if err.size else 0.0
