"""Omniscient update calibration: hide inside the benign update spread."""

import numpy as np

from ..engine import ParamVector


def lie_calibrate(benign_mean, benign_std, z):
    """Coordinate-wise mean + z * std of the benign updates.

    The caller computes the statistics over the benign participants' true
    updates of the current round; every attacker submits the same vector.
    """
    benign_mean.check_layout(benign_std)
    if np.any(benign_std.values < 0):
        raise ValueError("benign std must be non-negative")
    return ParamVector(benign_mean.values + z * benign_std.values, benign_mean.layout)


def benign_statistics(updates):
    """Coordinate mean and (population) std over a list of ParamVectors."""
    stacked = np.stack([u.values.astype(np.float64) for u in updates])
    layout = updates[0].layout
    dtype = updates[0].values.dtype
    mean = stacked.mean(axis=0).astype(dtype)
    std = stacked.std(axis=0).astype(dtype)
    return ParamVector(mean, layout), ParamVector(std, layout)
