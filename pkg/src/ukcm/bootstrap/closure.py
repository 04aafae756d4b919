"""Bootstrap closure on a finite region."""
from __future__ import annotations

import numpy as np

from ..family import UpdateFamily
from ..geometry import Parallelogram
from . import _kernels as K
from .config import AllHealthy, Boundary, Configuration, grid_for


def closure(config: Configuration, family: UpdateFamily) -> Configuration:
    """``[η]`` restricted to ``config.region``.

    Sites outside the region are read through the configuration's boundary
    convention and never change.  The input is not modified.
    """
    g = grid_for(family, config.region, config.boundary)
    state = g.state_from(config)
    K.close_flat(state, g.upd, g.rule_off, g.rule_len, g.inv_off, g.region_flat)
    return config.with_infected(g.region_infected(state))


def closure_points(points, family: UpdateFamily, region: Parallelogram,
                   boundary: Boundary | None = None) -> list:
    """Convenience wrapper: closure of a point set, as a sorted point list."""
    cfg = Configuration.from_infected(region, points, boundary or AllHealthy())
    return closure(cfg, family).infected_points()


def is_closed(config: Configuration, family: UpdateFamily) -> bool:
    return np.array_equal(closure(config, family).infected, config.infected)
