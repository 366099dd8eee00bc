"""Heisenberg picture of the uncorrelated approximation.

Two equivalent forms are evolved here. The canonical-operator form moves the
four matrices (Qc, Pc, Qq, Pq) with Qc, Pc starting as multiples of the
identity; it is restricted to interactions that are polynomials of degree at
most two, where the forces are unambiguous matrix polynomials. The symbol form
moves the Weyl symbols of the same four operators, which follow ordinary
two-body trajectories for any differentiable interaction; mean values are then
taken against the frozen initial Wigner function.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from qcdyn.core.config import settings
from qcdyn.core.exceptions import CapabilityError, ConfigurationError, GridMismatchError, HorizonError
from qcdyn.services.hybrid_model import ClassicalPhasePoint, WaveFunction
from qcdyn.services.potentials import Potential
from qcdyn.services.propagators import EvolutionRecord, IntegratorConfig
from qcdyn.services.wigner import WignerField
from qcdyn.utils.integrators import rk4_step, step_plan, velocity_verlet_step
from qcdyn.utils.stencils import DerivativeScheme, momentum_matrix

logger = logging.getLogger(__name__)


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


@dataclass(frozen=True, eq=False)
class CanonicalOperatorState:
    qc: np.ndarray
    pc: np.ndarray
    qq: np.ndarray
    pq: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        shape = np.shape(self.qq)
        for name in ("qc", "pc", "qq", "pq"):
            value = np.array(getattr(self, name), dtype=complex, copy=True)
            if value.shape != shape or value.ndim != 2 or shape[0] != shape[1]:
                raise ConfigurationError(f"operator {name} has shape {value.shape}, expected square {shape}")
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def initial(cls, x0: ClassicalPhasePoint, qgrid, hbar: float = None,
                momentum_scheme: DerivativeScheme = None) -> "CanonicalOperatorState":
        """Qc = q I, Pc = p I, Qq = diag(xi), Pq = -i hbar d/dxi."""
        hbar = settings.HBAR if hbar is None else hbar
        if momentum_scheme is None:
            momentum_scheme = DerivativeScheme.SPECTRAL if qgrid.periodic else DerivativeScheme.CENTRAL
        identity = np.eye(qgrid.n)
        return cls(
            qc=x0.q * identity,
            pc=x0.p * identity,
            qq=np.diag(qgrid.points),
            pq=momentum_matrix(qgrid, hbar, momentum_scheme),
            hbar=hbar,
        )

    def as_tuple(self) -> Tuple[np.ndarray, ...]:
        return self.qc, self.pc, self.qq, self.pq

    def quantum_commutator(self) -> np.ndarray:
        return _commutator(self.qq, self.pq)

    def total_commutator(self) -> np.ndarray:
        return _commutator(self.qc, self.pc) + _commutator(self.qq, self.pq)

    def hermitian_residual(self) -> float:
        return max(float(np.abs(m - m.conj().T).max()) for m in self.as_tuple())

    def expectations(self, psi: WaveFunction) -> Dict[str, float]:
        c = psi.coefficients()
        names = ("q_c", "p_c", "q_q", "p_q")
        return {name: float(np.real(c.conj() @ m @ c)) for name, m in zip(names, self.as_tuple())}


def _affine_coefficients(fn: Callable, label: str) -> Tuple[float, float, float]:
    """(a, b, c) with fn(q, xi) = a + b q + c xi, verified at a sample point."""
    a = float(fn(0.0, 0.0))
    b = float(fn(1.0, 0.0)) - a
    c = float(fn(0.0, 1.0)) - a
    sample = float(fn(0.7, -1.3))
    if abs(sample - (a + 0.7 * b - 1.3 * c)) > 1e-12 * max(1.0, abs(sample)):
        raise CapabilityError(f"{label} is not affine; the interaction is not a degree-2 polynomial")
    return a, b, c


def evolve_canonical_operators(s0: CanonicalOperatorState, phi: Potential, cfg: IntegratorConfig,
                               psi0: Optional[WaveFunction] = None) -> EvolutionRecord:
    if phi.degree is None or phi.degree > 2:
        raise CapabilityError(
            f"canonical-operator evolution needs a polynomial interaction of degree <= 2, got '{phi.kind}'",
            {"potential": phi.kind},
        )
    aq, bq, cq = _affine_coefficients(phi.d_dq, "dU/dq")
    ax, bx, cx = _affine_coefficients(phi.d_dxi, "dU/dxi")
    u0 = float(phi.energy(0.0, 0.0))
    identity = np.eye(s0.qq.shape[0])

    def energy_operator(state: CanonicalOperatorState) -> np.ndarray:
        # U = u0 + aq q + ax xi + bq q^2/2 + cq q xi + cx xi^2/2, cross term symmetrized
        qc, pc, qq, pq = state.as_tuple()
        return (
            0.5 * (pc @ pc + pq @ pq)
            + u0 * identity + aq * qc + ax * qq
            + 0.5 * bq * (qc @ qc) + 0.5 * cq * (qc @ qq + qq @ qc) + 0.5 * cx * (qq @ qq)
        )

    def rhs(y):
        qc, pc, qq, pq = y
        return (
            pc,
            -(aq * identity + bq * qc + cq * qq),
            pq,
            -(ax * identity + bx * qc + cx * qq),
        )

    quantum0 = s0.quantum_commutator()
    total0 = s0.total_commutator()

    def diagnose(state: CanonicalOperatorState) -> Dict[str, float]:
        values = {
            "hermitian_residual": state.hermitian_residual(),
            "quantum_commutator_drift": float(np.abs(state.quantum_commutator() - quantum0).max()),
            "total_commutator_drift": float(np.abs(state.total_commutator() - total0).max()),
        }
        if psi0 is not None:
            values.update(state.expectations(psi0))
            c = psi0.coefficients()
            values["energy"] = float(np.real(c.conj() @ energy_operator(state) @ c))
        return values

    steps, dt = step_plan(cfg.t_final, cfg.dt)
    record = EvolutionRecord()
    record.record(0.0, diagnose(s0), s0 if cfg.keep_snapshots else None)
    y = s0.as_tuple()
    for step in range(1, steps + 1):
        y = rk4_step(rhs, y, dt)
        if step % cfg.stride == 0 or step == steps:
            state = CanonicalOperatorState(*y, hbar=s0.hbar)
            record.record(step * dt, diagnose(state), state if cfg.keep_snapshots else None)
    record.final = CanonicalOperatorState(*y, hbar=s0.hbar)

    drift = record.column("total_commutator_drift")
    scale = max(float(np.abs(total0).max()), 1.0)
    if float(drift.max()) > 1e-8 * scale:
        logger.warning(f"total commutator drifted by {float(drift.max()):.3e}")
    logger.info(
        f"Canonical operators evolved to t={cfg.t_final} ({phi.kind}); "
        f"max commutator drift quantum={float(record.column('quantum_commutator_drift').max()):.3e} "
        f"total={float(drift.max()):.3e}"
    )
    return record


@dataclass(eq=False)
class SymbolTrajectorySet:
    """Two-body trajectories seeded on the support of an initial Wigner function.

    Coordinates have shape (records, trajectories). ``seeds`` holds the 4D grid
    indices of the seed nodes and ``weights`` the quadrature weights
    (2 pi hbar)^-1 w4 D0 at those nodes.
    """

    times: np.ndarray
    q1: np.ndarray
    p1: np.ndarray
    q2: np.ndarray
    p2: np.ndarray
    seeds: Tuple[np.ndarray, ...]
    weights: np.ndarray
    grid_digest: str
    discarded_mass: float = 0.0
    extras: Dict[str, float] = field(default_factory=dict)

    @property
    def count(self) -> int:
        return int(self.weights.size)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def positions_at(self, t: float) -> Tuple[np.ndarray, ...]:
        """Linear interpolation between recorded times."""
        if t < -1e-12 or t > self.horizon + 1e-12:
            raise HorizonError(f"t={t} is outside the trajectory horizon [0, {self.horizon}]",
                               {"t": t, "horizon": self.horizon})
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), self.times.size - 1)
        if k == self.times.size - 1 or abs(self.times[k] - t) <= 1e-12:
            return self.q1[k], self.p1[k], self.q2[k], self.p2[k]
        theta = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return tuple(
            (1.0 - theta) * arr[k] + theta * arr[k + 1] for arr in (self.q1, self.p1, self.q2, self.p2)
        )

    def energies(self, phi: Potential) -> np.ndarray:
        return 0.5 * self.p1 ** 2 + 0.5 * self.p2 ** 2 + phi.energy(self.q1, self.q2)


def _two_body_force(phi: Potential) -> Callable:
    def force(q: np.ndarray) -> np.ndarray:
        return np.stack([-phi.d_dq(q[0], q[1]), -phi.d_dxi(q[0], q[1])])

    return force


def _integrate(q: np.ndarray, p: np.ndarray, phi: Potential, steps: int, dt: float,
               stride: int) -> Tuple[List[float], List[np.ndarray], List[np.ndarray]]:
    force = _two_body_force(phi)
    times, qs, ps = [0.0], [q.copy()], [p.copy()]
    f = force(q)
    for step in range(1, steps + 1):
        q, p, f = velocity_verlet_step(force, q, p, dt, f)
        if step % stride == 0 or step == steps:
            times.append(step * dt)
            qs.append(q.copy())
            ps.append(p.copy())
    return times, qs, ps


def _seed(D0: WignerField, threshold: float):
    magnitude = np.abs(D0.data)
    peak = float(magnitude.max())
    mask = magnitude > threshold * peak if threshold > 0 else magnitude > 0
    seeds = np.nonzero(mask)
    if seeds[0].size < settings.MIN_TRAJECTORIES:
        raise ConfigurationError(
            f"only {seeds[0].size} nodes above the support threshold {threshold}",
            {"minimum": settings.MIN_TRAJECTORIES},
        )
    cell = D0.weights()
    weights = (cell * D0.data)[seeds]
    discarded = float(np.sum((cell * magnitude)[~mask]))
    q1, p1, q2, p2 = (
        D0.grid.q_grid.points[seeds[0]],
        D0.grid.p_grid.points[seeds[1]],
        D0.qgrid.points[seeds[2]],
        D0.pgrid2.points[seeds[3]],
    )
    return seeds, weights, discarded, np.stack([q1, q2]), np.stack([p1, p2])


def _wigner_digest(D0: WignerField) -> str:
    return f"{D0.grid.digest()}:{D0.qgrid.digest()}:{D0.hbar!r}"


def evolve_wigner_symbols(D0: WignerField, phi: Potential, cfg: IntegratorConfig,
                          threshold: float = None) -> SymbolTrajectorySet:
    """Velocity-Verlet trajectories from every node where |D0| > threshold * max|D0|."""
    threshold = settings.SUPPORT_THRESHOLD if threshold is None else threshold
    seeds, weights, discarded, q, p = _seed(D0, threshold)
    steps, dt = step_plan(cfg.t_final, cfg.dt)
    times, qs, ps = _integrate(q, p, phi, steps, dt, cfg.stride)
    qs, ps = np.asarray(qs), np.asarray(ps)

    traj = SymbolTrajectorySet(
        times=np.asarray(times),
        q1=qs[:, 0], p1=ps[:, 0], q2=qs[:, 1], p2=ps[:, 1],
        seeds=seeds,
        weights=weights,
        grid_digest=_wigner_digest(D0),
        discarded_mass=discarded,
    )
    energy = traj.energies(phi)
    scale = np.maximum(np.abs(energy[0]), 1.0)
    drift = float((np.abs(energy - energy[0]) / scale).max())
    traj.extras["max_energy_drift"] = drift
    logger.info(
        f"Evolved {traj.count} symbol trajectories to t={cfg.t_final} in {steps} steps; "
        f"discarded Wigner mass {discarded:.3e}, max relative energy drift {drift:.3e}"
    )
    return traj


def mean_from_symbols(traj: SymbolTrajectorySet, D0: WignerField, symbol: Callable, t: float) -> float:
    """(2 pi hbar)^-1 sum w4 D0(x) a(X(t; x)) over the seeded nodes."""
    if _wigner_digest(D0) != traj.grid_digest:
        raise GridMismatchError("trajectories were seeded from a Wigner function on other grids")
    weights = (D0.weights() * D0.data)[traj.seeds]
    q1, p1, q2, p2 = traj.positions_at(t)
    values = np.broadcast_to(symbol(q1, p1, q2, p2), weights.shape)
    return float(np.sum(weights * values))


COORDINATE_SYMBOLS = {
    "q_c": lambda q1, p1, q2, p2: q1,
    "p_c": lambda q1, p1, q2, p2: p1,
    "q_q": lambda q1, p1, q2, p2: q2,
    "p_q": lambda q1, p1, q2, p2: p2,
    "one": lambda q1, p1, q2, p2: np.ones_like(q1),
}


def symbol_record(traj: SymbolTrajectorySet, D0: WignerField, phi: Potential,
                  names=("q_c", "p_c", "q_q", "p_q")) -> EvolutionRecord:
    """Mean values of coordinate symbols (and of the two-body energy) at every recorded time."""
    unknown = [name for name in names if name not in COORDINATE_SYMBOLS]
    if unknown:
        raise ConfigurationError(f"no symbol trajectory column for {unknown}", {"available": sorted(COORDINATE_SYMBOLS)})
    record = EvolutionRecord()
    energy = traj.energies(phi)
    for k, t in enumerate(traj.times):
        values = {name: mean_from_symbols(traj, D0, COORDINATE_SYMBOLS[name], float(t)) for name in names}
        values["energy"] = float(np.sum(traj.weights * energy[k]))
        values["normalization"] = float(np.sum(traj.weights))
        record.record(float(t), values)
    record.final = traj
    return record


def reversibility_error(D0: WignerField, phi: Potential, cfg: IntegratorConfig,
                        threshold: float = None) -> float:
    """Max deviation after integrating forward to t_final and back with flipped momenta."""
    threshold = settings.SUPPORT_THRESHOLD if threshold is None else threshold
    _, _, _, q, p = _seed(D0, threshold)
    steps, dt = step_plan(cfg.t_final, cfg.dt)
    _, qs, ps = _integrate(q, p, phi, steps, dt, max(steps, 1))
    _, qb, pb = _integrate(qs[-1], -ps[-1], phi, steps, dt, max(steps, 1))
    error = max(float(np.abs(qb[-1] - q).max()), float(np.abs(-pb[-1] - p).max()))
    logger.info(f"Symbol trajectory reversibility error after t={cfg.t_final}: {error:.3e}")
    return error
