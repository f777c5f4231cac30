"""CVRP problem instances: data model, random generation and JSON file I/O.

Index convention: node 0 is the depot, customers are 1..n. Distances are
Euclidean rounded *up* to the nearest integer and are recomputed from the
coordinates whenever an instance is built or loaded, never stored on disk.

Randomness uses numpy's PCG64 (``numpy.random.default_rng``); the same seed
reproduces the same instance bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class InstanceError(ValueError):
    """Raised for invalid instance parameters or malformed instance files."""


def ceil_euclidean(p, q) -> int:
    """Distance between two points: Euclidean length rounded up to an integer."""
    d = math.hypot(p[0] - q[0], p[1] - q[1])
    return int(math.ceil(d))


def distance_matrix(coords: np.ndarray) -> np.ndarray:
    """Pairwise ceil-Euclidean distances for an (m, 2) coordinate array."""
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    out = np.ceil(d).astype(np.int64)
    np.fill_diagonal(out, 0)
    return out


@dataclass(frozen=True)
class Instance:
    """A CVRP instance.

    Attributes:
        coords: (n+1, 2) float array of coordinates, depot at row 0.
        demand: (n+1,) integer demands, demand[0] == 0 for the depot.
        capacity: vehicle capacity, identical for the whole fleet.
        n_vehicles: fleet size.
        dist: (n+1, n+1) integer ceil-Euclidean distance matrix.
    """

    coords: np.ndarray
    demand: np.ndarray
    capacity: int
    n_vehicles: int
    dist: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        demand = np.asarray(self.demand, dtype=np.int64)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "demand", demand)
        if coords.ndim != 2 or coords.shape[1] != 2 or coords.shape[0] < 2:
            raise InstanceError("coords must be (n+1, 2) with at least one customer")
        if demand.shape != (coords.shape[0],):
            raise InstanceError("demand length must match number of nodes")
        if demand[0] != 0:
            raise InstanceError("depot demand must be zero")
        if np.any(demand[1:] <= 0):
            raise InstanceError("customer demands must be positive")
        if self.capacity < 1 or self.n_vehicles < 1:
            raise InstanceError("capacity and fleet size must be positive")
        if np.any(demand[1:] > self.capacity):
            raise InstanceError("every customer demand must fit in one vehicle")
        dist = distance_matrix(coords)
        if self.dist is not None and not np.array_equal(np.asarray(self.dist), dist):
            raise InstanceError("stored distance matrix disagrees with coordinates")
        object.__setattr__(self, "dist", dist)
        for arr in (coords, demand, dist):
            arr.setflags(write=False)

    @property
    def n_customers(self) -> int:
        return self.coords.shape[0] - 1

    @property
    def customers(self) -> range:
        return range(1, self.n_customers + 1)

    @property
    def max_dist(self) -> int:
        return int(self.dist.max())


def generate_instance(
    seed: int,
    n_customers: int,
    grid_size: float,
    capacity: int,
    n_vehicles: int,
    demand: int = 1,
) -> Instance:
    """Generate a random instance: depot and customers i.i.d. uniform on the grid.

    All customers get the same integer demand. The depot uses the same
    [0, grid_size]^2 square as the customers.
    """
    if n_customers < 1:
        raise InstanceError("n_customers must be >= 1")
    if grid_size <= 0:
        raise InstanceError("grid_size must be positive")
    if demand < 1 or capacity < demand:
        raise InstanceError("need capacity >= demand >= 1")
    if n_vehicles < 1:
        raise InstanceError("n_vehicles must be >= 1")
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, grid_size, size=(n_customers + 1, 2))
    demands = np.full(n_customers + 1, demand, dtype=np.int64)
    demands[0] = 0
    return Instance(coords=coords, demand=demands, capacity=capacity, n_vehicles=n_vehicles)


def save_instance(inst: Instance, path) -> None:
    """Write an instance as a small JSON document (distances are not stored)."""
    doc = {
        "capacity": int(inst.capacity),
        "n_vehicles": int(inst.n_vehicles),
        "demand": int(inst.demand[1]) if inst.n_customers else 0,
        "depot": [float(inst.coords[0, 0]), float(inst.coords[0, 1])],
        "customers": [[float(x), float(y)] for x, y in inst.coords[1:]],
    }
    if np.any(inst.demand[1:] != inst.demand[1]):
        raise InstanceError("file format only supports uniform demand")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_instance(path) -> Instance:
    """Read an instance written by :func:`save_instance`; distances are recomputed."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"malformed instance file {path}: {exc}") from exc
    for key in ("capacity", "n_vehicles", "demand", "depot", "customers"):
        if key not in doc:
            raise InstanceError(f"instance file missing field {key!r}")
    depot = doc["depot"]
    customers = doc["customers"]
    if not isinstance(depot, list) or len(depot) != 2:
        raise InstanceError("depot must be an [x, y] pair")
    if not isinstance(customers, list) or not customers or not all(
        isinstance(c, list) and len(c) == 2 for c in customers
    ):
        raise InstanceError("customers must be a non-empty list of [x, y] pairs")
    coords = np.array([depot] + customers, dtype=np.float64)
    demand = np.full(len(customers) + 1, int(doc["demand"]), dtype=np.int64)
    demand[0] = 0
    return Instance(
        coords=coords,
        demand=demand,
        capacity=int(doc["capacity"]),
        n_vehicles=int(doc["n_vehicles"]),
    )
