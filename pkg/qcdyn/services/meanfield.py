"""Uncorrelated (self-consistent field) approximations of the hybrid dynamics.

Two levels are provided:

* the distribution level, where the classical density D(q, p) and the quantum
  density matrix rho each move in the mean field of the other;
* the trajectory level (Ehrenfest), where a single classical point (Q, P) is
  driven by the quantum-mean force and the wave function by the instantaneous
  potential U(Q, xi).
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional

import numpy as np
from scipy.linalg import solve

from qcdyn.core.config import settings
from qcdyn.core.exceptions import (
    ConfigurationError,
    NormalizationDriftError,
    NumericalConsistencyError,
    PotentialRangeError,
)
from qcdyn.schemas.report import ComparisonReport
from qcdyn.services.comparison import compare_series
from qcdyn.services.generator import GeneratorConfigRep
from qcdyn.services.hybrid_model import (
    ClassicalDistribution,
    ClassicalPhasePoint,
    HybridHamiltonian,
    WaveFunction,
)
from qcdyn.services.propagators import EvolutionRecord, IntegratorConfig, Scheme, check_time_step
from qcdyn.utils.integrators import composition_weights, rk4_step, step_plan
from qcdyn.utils.stencils import DerivativeScheme, kinetic_dispersion, momentum_matrix

logger = logging.getLogger(__name__)

FINITE_PARTICLE_CAVEAT = (
    "The self-consistent set neglects the correlation operator. For a system of finitely many "
    "particles it is an uncorrelated approximation, not a mean-field limit."
)


@dataclass(frozen=True, eq=False)
class MeanFieldState:
    classical: ClassicalDistribution
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex, copy=True)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ConfigurationError(f"density matrix must be square, got shape {rho.shape}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def create(cls, classical: ClassicalDistribution, rho: np.ndarray) -> "MeanFieldState":
        state = cls(classical, rho)
        gap = float(np.abs(state.rho - state.rho.conj().T).max())
        if gap > settings.HERMITIAN_TOL * max(float(np.abs(state.rho).max()), 1e-300):
            raise NumericalConsistencyError(f"density matrix is not Hermitian ({gap:.3e})")
        trace = state.trace()
        if abs(trace - 1.0) > settings.NORM_TOL:
            raise NumericalConsistencyError(f"density matrix trace {trace!r} differs from 1", {"trace": trace})
        return state

    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))[0])


@dataclass(frozen=True, eq=False)
class EhrenfestState:
    x: ClassicalPhasePoint
    psi: WaveFunction

    def energy(self, H: HybridHamiltonian) -> float:
        """P^2/2 + <psi|h_q|psi> + sum_j |c_j|^2 U(Q, xi_j)."""
        c = self.psi.coefficients()
        kinetic = float(np.real(c.conj() @ H.h_q @ c))
        coupling = float(np.sum(np.abs(c) ** 2 * H.potential.energy(self.x.q, H.qgrid.points)))
        return 0.5 * self.x.p ** 2 + kinetic + coupling


def _require_rk4(cfg: IntegratorConfig, solver: str) -> None:
    if cfg.scheme is not Scheme.RK4:
        raise ConfigurationError(
            f"{solver} is nonlinear and only supports the rk4 scheme", {"scheme": cfg.scheme.value}
        )


def evolve_distribution_meanfield(s0: MeanFieldState, H: HybridHamiltonian, cfg: IntegratorConfig,
                                  q_scheme: DerivativeScheme = DerivativeScheme.CENTRAL,
                                  p_scheme: DerivativeScheme = DerivativeScheme.CENTRAL) -> EvolutionRecord:
    """Coupled RK4 on (D, rho); both effective potentials are rebuilt at every stage.

    dD/dt   = dV_eff/dq * dD/dp - p * dD/dq,   V_eff(q) = Tr(U(q) rho)
    drho/dt = -(i/hbar) [h_q + V_q, rho],     V_q(xi) = sum_X w D(X) U(q, xi)
    """
    _require_rk4(cfg, "evolve_distribution_meanfield")
    if s0.rho.shape != (H.qgrid.n, H.qgrid.n):
        raise ConfigurationError(f"density matrix shape {s0.rho.shape} does not match n={H.qgrid.n}")
    ops = GeneratorConfigRep(H, q_scheme, p_scheme)
    check_time_step(ops, cfg)

    pgrid = H.grid
    weights = pgrid.weights
    u = H.h_int
    force = ops.force
    q_mesh, p_mesh = pgrid.mesh
    xi = H.qgrid.points
    p_q = momentum_matrix(H.qgrid, H.hbar, DerivativeScheme.SPECTRAL if H.qgrid.periodic else DerivativeScheme.CENTRAL)

    def rhs(y):
        dist, rho = y
        populations = np.real(np.diag(rho))
        dv_eff = force @ populations
        d_dist = dv_eff[:, None] * ops.d_dp(dist) - p_mesh * ops.d_dq(dist)
        v_q = (weights * dist).sum(axis=1) @ u
        h_eff = H.h_q + np.diag(v_q)
        d_rho = (-1j / H.hbar) * (h_eff @ rho - rho @ h_eff)
        return d_dist, d_rho

    def diagnose(dist, rho) -> Dict[str, float]:
        populations = np.real(np.diag(rho))
        marginal_q = (weights * dist).sum(axis=1)
        return {
            "normalization": float(np.sum(weights * dist)),
            "trace_rho": float(np.real(np.trace(rho))),
            "q_c": float(np.sum(weights * dist * q_mesh)),
            "p_c": float(np.sum(weights * dist * p_mesh)),
            "q_q": float(populations @ xi),
            "p_q": float(np.real(np.trace(p_q @ rho))),
            "energy": float(
                np.sum(weights * dist * H.h_c)
                + np.real(np.trace(H.h_q @ rho))
                + marginal_q @ u @ populations
            ),
            "min_eigenvalue": float(np.linalg.eigvalsh(rho)[0]),
        }

    steps, dt = step_plan(cfg.t_final, cfg.dt)
    dist = np.array(s0.classical.data, dtype=float)
    rho = np.array(s0.rho, dtype=complex)
    reference = diagnose(dist, rho)
    record = EvolutionRecord()
    record.record(0.0, reference, s0 if cfg.keep_snapshots else None)
    worst_negative = 0.0

    for step in range(1, steps + 1):
        dist, rho = rk4_step(rhs, (dist, rho), dt)
        dist = np.real(dist)
        rho = 0.5 * (rho + rho.conj().T)
        t = step * dt
        norm_c = float(np.sum(weights * dist))
        trace = float(np.real(np.trace(rho)))
        for label, value, ref in (("classical normalization", norm_c, reference["normalization"]),
                                  ("trace of rho", trace, reference["trace_rho"])):
            if abs(value - ref) > cfg.drift_limit:
                raise NormalizationDriftError(
                    f"{label} drifted by {abs(value - ref):.3e} at t={t:.6g}",
                    {"t": t, "value": value, "reference": ref, "limit": cfg.drift_limit},
                )
        if step % cfg.stride == 0 or step == steps:
            values = diagnose(dist, rho)
            if values["min_eigenvalue"] < -settings.POSITIVITY_TOL:
                worst_negative = min(worst_negative, values["min_eigenvalue"])
                logger.warning(f"rho lost positivity at t={t:.6g}: min eigenvalue {values['min_eigenvalue']:.3e}")
            state = MeanFieldState(ClassicalDistribution(pgrid, dist), rho) if cfg.keep_snapshots else None
            record.record(t, values, state)

    record.final = MeanFieldState(ClassicalDistribution(pgrid, dist), rho)
    logger.info(
        f"Mean-field distribution run to t={cfg.t_final} in {steps} steps; "
        f"most negative rho eigenvalue {worst_negative:.3e}"
    )
    return record


class _QuantumStepper:
    """Unitary step of i hbar dc/dt = (h_q + diag U(Q, xi)) c at frozen Q."""

    def __init__(self, H: HybridHamiltonian, method: str):
        self.H = H
        self.method = method
        if method == "split_operator":
            if not H.qgrid.periodic:
                raise ConfigurationError("split-operator quantum step needs a periodic quantum grid")
            self.dispersion = kinetic_dispersion(H.qgrid, H.hbar, H.kinetic_scheme)
        elif method != "crank_nicolson":
            raise ConfigurationError(f"unknown quantum step '{method}'")

    def __call__(self, c: np.ndarray, q: float, dt: float) -> np.ndarray:
        H = self.H
        v = H.potential.energy(q, H.qgrid.points)
        if self.method == "split_operator":
            half = np.exp(-0.5j * dt * v / H.hbar)
            c = half * c
            c = np.fft.ifft(np.exp(-1j * dt * self.dispersion / H.hbar) * np.fft.fft(c))
            return half * c
        h = H.h_q + np.diag(v)
        a = 0.5j * dt / H.hbar * h
        identity = np.eye(h.shape[0])
        return solve(identity + a, (identity - a) @ c)


def _resolve_quantum_step(H: HybridHamiltonian, quantum_step: str) -> str:
    if quantum_step == "auto":
        return "split_operator" if H.qgrid.periodic else "crank_nicolson"
    return quantum_step


def ehrenfest_evolve(s0: EhrenfestState, H: HybridHamiltonian, cfg: IntegratorConfig,
                     quantum_step: str = "auto", composition: Optional[str] = None) -> EvolutionRecord:
    """Newton-Schroedinger set by a symmetric kick / quantum / drift / quantum / kick step.

    The symmetric step is used as is ("strang") or composed into a fourth-order
    triple jump ("yoshida4").
    """
    _require_rk4(cfg, "ehrenfest_evolve")
    composition = settings.EHRENFEST_COMPOSITION if composition is None else composition
    try:
        weights = composition_weights(composition)
    except ValueError as exc:
        raise ConfigurationError(str(exc), {"composition": composition})
    method = _resolve_quantum_step(H, quantum_step)
    stepper = _QuantumStepper(H, method)
    qgrid = H.qgrid
    xi = qgrid.points
    phi = H.potential
    p_q = momentum_matrix(qgrid, H.hbar, DerivativeScheme.SPECTRAL if qgrid.periodic else DerivativeScheme.CENTRAL)

    def mean_force(q: float, c: np.ndarray) -> float:
        phi.check_range(float(q - xi.max()), float(q - xi.min()))
        density = np.abs(c) ** 2
        if not qgrid.periodic:
            edge = float(density[0] + density[-1])
            if edge > settings.EDGE_MASS_TOL:
                raise PotentialRangeError(
                    f"wave function reached the edge of the bounded grid (edge mass {edge:.3e})",
                    {"edge_mass": edge, "tolerance": settings.EDGE_MASS_TOL},
                )
        return -float(np.sum(density * phi.d_dq(q, xi)))

    def symmetric_step(q: float, p: float, c: np.ndarray, h: float):
        p += 0.5 * h * mean_force(q, c)
        c = stepper(c, q, 0.5 * h)
        q += h * p
        c = stepper(c, q, 0.5 * h)
        p += 0.5 * h * mean_force(q, c)
        return q, p, c

    def state_of(q, p, c) -> EhrenfestState:
        return EhrenfestState(ClassicalPhasePoint(q, p), WaveFunction.from_coefficients(qgrid, c))

    def diagnose(q, p, c) -> Dict[str, float]:
        density = np.abs(c) ** 2
        norm = float(np.sum(density))
        return {
            "q_c": q,
            "p_c": p,
            "q_q": float(density @ xi),
            "p_q": float(np.real(c.conj() @ p_q @ c)),
            "energy": state_of(q, p, c / np.sqrt(norm)).energy(H),
            "norm": norm,
        }

    steps, dt = step_plan(cfg.t_final, cfg.dt)
    q, p = float(s0.x.q), float(s0.x.p)
    c = s0.psi.coefficients().astype(complex)
    record = EvolutionRecord()
    record.record(0.0, diagnose(q, p, c), s0 if cfg.keep_snapshots else None)
    norm0 = float(np.sum(np.abs(c) ** 2))

    for step in range(1, steps + 1):
        for w in weights:
            q, p, c = symmetric_step(q, p, c, w * dt)
        if step % cfg.stride == 0 or step == steps:
            values = diagnose(q, p, c)
            record.record(step * dt, values, state_of(q, p, c) if cfg.keep_snapshots else None)
            logger.debug(f"Ehrenfest t={step * dt:.6g}: Q={q:.6g} P={p:.6g} E={values['energy']:.12g}")

    drift = abs(float(np.sum(np.abs(c) ** 2)) - norm0)
    if drift > settings.WAVEFUNCTION_NORM_TOL:
        logger.warning(f"Ehrenfest wave-function norm drifted by {drift:.3e}")
    record.final = state_of(q, p, c / np.sqrt(np.sum(np.abs(c) ** 2)))
    energy = record.column("energy")
    logger.info(
        f"Ehrenfest run to t={cfg.t_final} in {steps} steps ({method}, {composition}); "
        f"norm drift {drift:.3e}, energy drift {float(np.abs(energy - energy[0]).max()):.3e}"
    )
    return record


def compare_with_full(approx: EvolutionRecord, full: EvolutionRecord, columns: Iterable[str],
                      tol: Optional[float] = None, interpolate: bool = False) -> ComparisonReport:
    """|<A>_full - <A>_approx| over time, with the full run's correlation norm alongside."""
    report = compare_series(
        approx.times, approx.diagnostics, full.times, full.diagnostics, list(columns), tol, interpolate
    )
    if "correlation_norm" in full.diagnostics:
        times = np.asarray(full.times)
        report.correlation_norm = np.interp(report.times, times, full.column("correlation_norm")).tolist()
    report.notes.append(FINITE_PARTICLE_CAVEAT)
    return report
