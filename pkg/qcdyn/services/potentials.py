"""Interaction potentials between the classical and the quantum particle.

Every potential is exposed as an interaction energy U(q, xi) of the classical
coordinate q and the quantum coordinate xi, with analytic partials. Difference
potentials are Phi(r) evaluated at r = q - xi. Bilinear is the cross term
c*q*xi and is not a difference potential.
"""
from dataclasses import dataclass, field
from typing import ClassVar, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from qcdyn.core.exceptions import ConfigurationError, PotentialRangeError


class Potential:
    kind: ClassVar[str] = "base"
    # polynomial degree in (q, xi), None when not a polynomial
    degree: ClassVar[Optional[int]] = None

    def energy(self, q, xi):
        raise NotImplementedError

    def d_dq(self, q, xi):
        raise NotImplementedError

    def d_dxi(self, q, xi):
        raise NotImplementedError

    def check_range(self, r_min: float, r_max: float) -> None:
        pass

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class ZeroPotential(Potential):
    kind: ClassVar[str] = "zero"
    degree: ClassVar[Optional[int]] = 0

    def energy(self, q, xi):
        return np.zeros(np.broadcast(q, xi).shape)

    def d_dq(self, q, xi):
        return np.zeros(np.broadcast(q, xi).shape)

    def d_dxi(self, q, xi):
        return np.zeros(np.broadcast(q, xi).shape)


@dataclass(frozen=True)
class HarmonicPotential(Potential):
    """Phi(r) = k r^2 / 2."""

    k: float
    kind: ClassVar[str] = "harmonic"
    degree: ClassVar[Optional[int]] = 2

    def __post_init__(self):
        if not self.k > 0:
            raise ConfigurationError(f"harmonic stiffness must be positive, got {self.k}", {"k": self.k})

    def energy(self, q, xi):
        r = np.subtract(q, xi)
        return 0.5 * self.k * r * r

    def d_dq(self, q, xi):
        return self.k * np.subtract(q, xi)

    def d_dxi(self, q, xi):
        return -self.k * np.subtract(q, xi)

    def params(self) -> dict:
        return {"k": self.k}


@dataclass(frozen=True)
class BilinearPotential(Potential):
    """U(q, xi) = c q xi; linear forces close the first-moment equations."""

    c: float
    kind: ClassVar[str] = "bilinear"
    degree: ClassVar[Optional[int]] = 2

    def energy(self, q, xi):
        return self.c * np.multiply(q, xi)

    def d_dq(self, q, xi):
        return self.c * np.broadcast_to(xi, np.broadcast(q, xi).shape).astype(float)

    def d_dxi(self, q, xi):
        return self.c * np.broadcast_to(q, np.broadcast(q, xi).shape).astype(float)

    def params(self) -> dict:
        return {"c": self.c}


@dataclass(frozen=True)
class GaussianBumpPotential(Potential):
    """Phi(r) = V0 exp(-r^2 / (2 w^2))."""

    v0: float
    w: float
    kind: ClassVar[str] = "gaussian_bump"

    def __post_init__(self):
        if not self.w > 0:
            raise ConfigurationError(f"gaussian bump width must be positive, got {self.w}", {"w": self.w})

    def energy(self, q, xi):
        r = np.subtract(q, xi)
        return self.v0 * np.exp(-r * r / (2.0 * self.w ** 2))

    def d_dq(self, q, xi):
        r = np.subtract(q, xi)
        return -r / self.w ** 2 * self.energy(q, xi)

    def d_dxi(self, q, xi):
        return -self.d_dq(q, xi)

    def params(self) -> dict:
        return {"v0": self.v0, "w": self.w}


@dataclass(frozen=True, eq=False)
class TabulatedPotential(Potential):
    """Phi sampled on an ascending radial grid r = q - xi, cubic-spline interpolated."""

    r: Tuple[float, ...]
    values: Tuple[float, ...]
    kind: ClassVar[str] = "tabulated"
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.size != v.size or r.size < 4:
            raise ConfigurationError("tabulated potential needs >= 4 matching (r, value) samples")
        if np.any(np.diff(r) <= 0):
            raise ConfigurationError("tabulated radial grid must be strictly ascending")
        object.__setattr__(self, "r", tuple(r.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "_spline", CubicSpline(r, v))

    def __eq__(self, other):
        return isinstance(other, TabulatedPotential) and self.r == other.r and self.values == other.values

    def __hash__(self):
        return hash((self.r, self.values))

    def _rvals(self, q, xi):
        r = np.subtract(q, xi)
        if r.size and (r.min() < self.r[0] or r.max() > self.r[-1]):
            raise PotentialRangeError(
                f"separation outside tabulated range [{self.r[0]}, {self.r[-1]}]",
                {"r_min": float(r.min()), "r_max": float(r.max())},
            )
        return r

    def energy(self, q, xi):
        return self._spline(self._rvals(q, xi))

    def d_dq(self, q, xi):
        return self._spline(self._rvals(q, xi), 1)

    def d_dxi(self, q, xi):
        return -self.d_dq(q, xi)

    def check_range(self, r_min: float, r_max: float) -> None:
        if r_min < self.r[0] or r_max > self.r[-1]:
            raise PotentialRangeError(
                f"tabulated potential covers [{self.r[0]}, {self.r[-1]}] "
                f"but the grids reach [{r_min}, {r_max}]",
                {"table": (self.r[0], self.r[-1]), "reachable": (r_min, r_max)},
            )

    def params(self) -> dict:
        return {"r": list(self.r), "values": list(self.values)}


POTENTIAL_KINDS = {
    cls.kind: cls
    for cls in (ZeroPotential, HarmonicPotential, BilinearPotential, GaussianBumpPotential, TabulatedPotential)
}


def make_potential(kind: str, **params) -> Potential:
    try:
        cls = POTENTIAL_KINDS[kind]
    except KeyError:
        raise ConfigurationError(f"unknown potential kind '{kind}'", {"available": sorted(POTENTIAL_KINDS)})
    return cls(**params)
