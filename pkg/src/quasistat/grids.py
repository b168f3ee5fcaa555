"""Discretization grids on [lower, threshold] for the killed kernel."""

from dataclasses import dataclass, field

import numpy as np

from . import validation
from .exceptions import DomainError

__all__ = ["GridSpec", "default_grid", "DEFAULT_N_CELLS", "DEFAULT_LOWER_RATIO"]

DEFAULT_N_CELLS = 400
# default lower edge of geometric grids relative to the threshold
DEFAULT_LOWER_RATIO = 1e-8


@dataclass(frozen=True)
class GridSpec:
    """Cell edges plus per-cell representative (collocation) points.

    ``kind`` selects the representative rule: arithmetic midpoints for
    uniform grids, geometric midpoints sqrt(x_i * x_{i+1}) for geometric
    (log-spaced) grids.  Edges must be strictly increasing; geometric grids
    need a strictly positive lower edge.
    """

    kind: str
    edges: np.ndarray
    representatives: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("uniform", "geometric"):
            raise DomainError(f"grid kind must be 'uniform' or 'geometric', got {self.kind!r}")
        edges = validation.as_float_array(self.edges, "edges")
        if edges.ndim != 1 or edges.size < 3:
            raise DomainError("grid needs at least 2 cells (3 edges)")
        if np.any(np.diff(edges) <= 0):
            raise DomainError("grid edges must be strictly increasing")
        if edges[0] < 0:
            raise DomainError("grid lower edge must be nonnegative")
        if self.kind == "geometric" and edges[0] <= 0:
            raise DomainError("geometric grids need a positive lower edge")
        edges = edges.copy()
        edges.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        if self.kind == "geometric":
            reps = np.sqrt(edges[:-1] * edges[1:])
        else:
            reps = 0.5 * (edges[:-1] + edges[1:])
        reps.flags.writeable = False
        object.__setattr__(self, "representatives", reps)

    @property
    def n_cells(self):
        return self.edges.size - 1

    @property
    def lower(self):
        return float(self.edges[0])

    @property
    def upper(self):
        return float(self.edges[-1])

    @classmethod
    def uniform(cls, n_cells, lower, upper):
        n_cells = validation.check_positive_int(n_cells, "n_cells", minimum=2)
        return cls("uniform", np.linspace(lower, upper, n_cells + 1))

    @classmethod
    def geometric(cls, n_cells, lower, upper):
        n_cells = validation.check_positive_int(n_cells, "n_cells", minimum=2)
        if not lower > 0:
            raise DomainError("geometric grids need lower > 0")
        return cls("geometric", np.geomspace(lower, upper, n_cells + 1))

    @classmethod
    def build(cls, kind, n_cells, lower, upper):
        if kind == "uniform":
            return cls.uniform(n_cells, lower, upper)
        if kind == "geometric":
            return cls.geometric(n_cells, lower, upper)
        raise DomainError(f"grid kind must be 'uniform' or 'geometric', got {kind!r}")

    def scaled(self, y):
        """Grid with every edge multiplied by y (>0); cell structure aligns
        with the original under x -> y*x, so scaled thresholds compare
        cell-by-cell."""
        y = validation.check_scalar(y, "y", minimum=0.0, exclusive_min=True)
        return GridSpec(self.kind, self.edges * y)


def default_grid(kernel, threshold, kind="geometric", n_cells=DEFAULT_N_CELLS, lower=None):
    """Default discretization for a kernel at a threshold.

    Geometric (log-spaced) grids suit multiplicative dynamics, whose mass
    spreads over orders of magnitude; the lower edge defaults to
    max(state_space_floor, threshold * 1e-8).
    """
    threshold = validation.check_scalar(threshold, "threshold", minimum=0.0, exclusive_min=True)
    if lower is None:
        if kind == "geometric":
            lower = max(kernel.state_space_floor, threshold * DEFAULT_LOWER_RATIO)
        else:
            lower = kernel.state_space_floor
    lower = validation.check_scalar(lower, "lower", minimum=0.0)
    if lower < kernel.state_space_floor:
        raise DomainError("grid lower edge must not go below the kernel's state_space_floor")
    if lower >= threshold:
        raise DomainError("grid lower edge must lie below the threshold")
    return GridSpec.build(kind, n_cells, lower, threshold)
