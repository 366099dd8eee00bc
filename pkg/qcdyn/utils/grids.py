"""Uniform 1D grids and the classical phase-space product grid."""
import hashlib
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from qcdyn.core.exceptions import GridMismatchError, ConfigurationError


class Boundary(str, Enum):
    PERIODIC = "periodic"
    BOUNDED = "bounded"


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on [x_min, x_max].

    Periodic grids hold n points x_min + i*dx with dx = (x_max - x_min)/n
    (x_max itself is the image of x_min). Bounded grids include both ends,
    dx = (x_max - x_min)/(n - 1), and integrate with the trapezoid rule.
    The same structure serves momentum axes.
    """

    x_min: float
    x_max: float
    n: int
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if not self.x_max > self.x_min:
            raise ConfigurationError(
                f"grid needs x_max > x_min, got [{self.x_min}, {self.x_max}]",
                {"x_min": self.x_min, "x_max": self.x_max},
            )
        if int(self.n) != self.n or self.n < 2:
            raise ConfigurationError(f"grid needs n >= 2 points, got {self.n}", {"n": self.n})
        object.__setattr__(self, "n", int(self.n))

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @cached_property
    def dx(self) -> float:
        if self.periodic:
            return self.length / self.n
        return self.length / (self.n - 1)

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.x_min + self.dx * np.arange(self.n)
        pts.setflags(write=False)
        return pts

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.dx)
        if not self.periodic:
            w[0] *= 0.5
            w[-1] *= 0.5
        w.setflags(write=False)
        return w

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in FFT order; periodic grids only."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def integrate(self, values: np.ndarray, axis: int = -1) -> np.ndarray:
        values = np.moveaxis(np.asarray(values), axis, -1)
        return values @ self.weights

    def descriptor(self) -> dict:
        return {
            "x_min": float(self.x_min),
            "x_max": float(self.x_max),
            "n": self.n,
            "boundary": self.boundary.value,
        }

    def digest(self) -> str:
        text = repr(sorted(self.descriptor().items()))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]

    def conjugate_momentum_grid(self, hbar: float) -> "SpatialGrid":
        """Momentum axis p_k = k * 2*pi*hbar/L, k centred, ascending."""
        dp = 2.0 * np.pi * hbar / self.length
        p_min = -((self.n - 1) // 2) * dp
        return SpatialGrid(p_min, p_min + self.n * dp, self.n, Boundary.PERIODIC)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    q_grid: SpatialGrid
    p_grid: SpatialGrid

    def __post_init__(self):
        if np.any(self.weights <= 0.0):
            raise ConfigurationError("phase-space quadrature weights must be strictly positive")

    @property
    def shape(self) -> tuple:
        return (self.q_grid.n, self.p_grid.n)

    @property
    def dq(self) -> float:
        return self.q_grid.dx

    @property
    def dp(self) -> float:
        return self.p_grid.dx

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.outer(self.q_grid.weights, self.p_grid.weights)
        w.setflags(write=False)
        return w

    @cached_property
    def mesh(self) -> tuple:
        q, p = np.meshgrid(self.q_grid.points, self.p_grid.points, indexing="ij")
        return q, p

    def descriptor(self) -> dict:
        return {"q": self.q_grid.descriptor(), "p": self.p_grid.descriptor()}

    def digest(self) -> str:
        return hashlib.sha256((self.q_grid.digest() + self.p_grid.digest()).encode()).hexdigest()[:12]


def require_same_grid(label: str, *grids) -> None:
    first = grids[0]
    for other in grids[1:]:
        if other != first:
            raise GridMismatchError(
                f"{label}: fields live on different grids",
                {"expected": repr(first), "got": repr(other)},
            )
