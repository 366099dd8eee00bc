"""Time integration of the Heisenberg (observables) and Liouville (states) equations."""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from scipy.linalg import expm

from qcdyn.core.config import settings
from qcdyn.core.exceptions import (
    ConfigurationError,
    NormalizationDriftError,
    NumericalConsistencyError,
    OracleSizeError,
    RoleError,
)
from qcdyn.services.generator import (
    DenseGenerator,
    Generator,
    GeneratorWignerRep,
    apply_generator,
    assemble_dense_generator,
)
from qcdyn.services.hybrid_model import Role, correlation, mean_value, pairing
from qcdyn.services.wigner import inverse_wigner_transform, mean_value_wigner
from qcdyn.utils.integrators import rk4_step, step_plan

logger = logging.getLogger(__name__)


class Scheme(str, Enum):
    RK4 = "rk4"
    EXACT_DENSE = "exact_dense"


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = settings.DEFAULT_DT
    t_final: float = 1.0
    scheme: Scheme = Scheme.RK4
    stride: int = settings.DEFAULT_STRIDE
    safety: float = settings.CFL_SAFETY
    rescale: bool = False
    keep_snapshots: bool = False
    drift_limit: float = settings.NORM_DRIFT_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}", {"dt": self.dt})
        if self.t_final < 0:
            raise ConfigurationError(f"t_final must be >= 0, got {self.t_final}", {"t_final": self.t_final})
        if self.stride < 1:
            raise ConfigurationError(f"stride must be >= 1, got {self.stride}", {"stride": self.stride})
        if not self.safety > 0:
            raise ConfigurationError(f"safety factor must be positive, got {self.safety}")


@dataclass
class EvolutionRecord:
    times: List[float] = field(default_factory=list)
    diagnostics: Dict[str, List[float]] = field(default_factory=dict)
    snapshots: List[object] = field(default_factory=list)
    final: Optional[object] = None

    def record(self, t: float, values: Dict[str, float], snapshot=None) -> None:
        self.times.append(float(t))
        for name, value in values.items():
            self.diagnostics.setdefault(name, []).append(float(value))
        if snapshot is not None:
            self.snapshots.append(snapshot)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.diagnostics[name])

    @property
    def columns(self) -> List[str]:
        return list(self.diagnostics)


def max_stable_dt(gen: Generator, safety: float = None) -> float:
    """safety * min(dq/|p|max, dp/|F|max, hbar/dE); an engineering heuristic."""
    safety = settings.CFL_SAFETY if safety is None else safety
    cfg = gen.config if isinstance(gen, GeneratorWignerRep) else gen
    H = cfg.hamiltonian
    p_max, f_max = cfg.classical_speeds()
    limits = []
    if p_max > 0:
        limits.append(H.grid.dq / p_max)
    if f_max > 0:
        limits.append(H.grid.dp / f_max)
    spread = H.energy_spread()
    if spread > 0:
        limits.append(H.hbar / spread)
    return safety * min(limits) if limits else np.inf


def check_time_step(gen: Generator, cfg: IntegratorConfig) -> None:
    if cfg.scheme is Scheme.EXACT_DENSE:
        return
    limit = max_stable_dt(gen, cfg.safety)
    if cfg.dt > limit:
        raise ConfigurationError(
            f"dt={cfg.dt} violates the stability guard dt <= {limit:.4e}",
            {"dt": cfg.dt, "limit": limit, "safety": cfg.safety},
        )
    logger.debug(f"Time-step guard ok: dt={cfg.dt} <= {limit:.4e}")


def _dense_propagator(G: DenseGenerator, t: float, sign: int, cap: int = None) -> np.ndarray:
    cap = settings.ORACLE_CAP if cap is None else cap
    if G.dimension > cap:
        raise OracleSizeError(f"dense dimension {G.dimension} exceeds the cap {cap}")
    if sign not in (1, -1):
        raise ConfigurationError(f"sign must be +1 or -1, got {sign}")
    return expm(sign * t * G.matrix)


def _check_commutation(propagator: np.ndarray, G: DenseGenerator, v0: np.ndarray, v: np.ndarray,
                       sign: int, t: float) -> None:
    # d/dt exp(tG) v0 = exp(tG) G v0 = G exp(tG) v0
    lhs = propagator @ (sign * G.apply(v0))
    rhs = sign * G.apply(v)
    scale = max(float(np.abs(lhs).max()), float(np.abs(rhs).max()), 1.0)
    residual = float(np.abs(lhs - rhs).max())
    if residual > 1e-8 * scale:
        raise NumericalConsistencyError(
            f"dense exponential residual {residual:.3e} too large", {"t": t, "scale": scale}
        )


def exact_dense_propagate(v0: np.ndarray, G: DenseGenerator, t: float, sign: int = 1,
                          cap: int = None) -> np.ndarray:
    """exp(sign t G) v0 by scaling and squaring, with a commutation residual check."""
    if t == 0.0:
        _dense_propagator(G, 0.0, sign, cap)
        return np.array(v0, copy=True)
    propagator = _dense_propagator(G, t, sign, cap)
    v = propagator @ v0
    _check_commutation(propagator, G, v0, v, sign, t)
    return v


def _is_wigner(gen: Generator) -> bool:
    return isinstance(gen, GeneratorWignerRep)


def _mean(gen: Generator, A, D) -> float:
    if _is_wigner(gen):
        return mean_value_wigner(A, D, gen.hbar)
    return mean_value(A, D)


def _energy_observable(gen: Generator):
    return gen.h_symbol if _is_wigner(gen) else gen.hamiltonian.as_observable()


def _correlation_norm(gen: Generator, D) -> float:
    config_state = inverse_wigner_transform(D) if _is_wigner(gen) else D
    return correlation(config_state).hs_norm()


def _normalization(D) -> float:
    return D.normalization()


def _state_diagnostics(gen, D, observables) -> Dict[str, float]:
    values = {
        "normalization": _normalization(D),
        "energy": _mean(gen, _energy_observable(gen), D),
        "correlation_norm": _correlation_norm(gen, D),
    }
    for name, A in (observables or {}).items():
        values[name] = _mean(gen, A, D)
    return values


def _observable_diagnostics(gen, A, pair_with) -> Dict[str, float]:
    values = {"norm": float(np.sqrt(np.sum(np.abs(A.data) ** 2)))}
    for name, D in (pair_with or {}).items():
        if _is_wigner(gen):
            values[name] = float(np.real(np.sum(D.weights() * A.data * D.data)))
        else:
            values[name] = pairing(A, D).real
    return values


def propagate_observable(A0, gen: Generator, cfg: IntegratorConfig,
                         pair_with: Optional[Dict[str, object]] = None) -> EvolutionRecord:
    """dA/dt = +L A."""
    if A0.role is not Role.OBSERVABLE:
        _reject_role("propagate_observable", A0)
    return _propagate(A0, gen, cfg, +1, lambda A: _observable_diagnostics(gen, A, pair_with))


def propagate_state(D0, gen: Generator, cfg: IntegratorConfig,
                    observables: Optional[Dict[str, object]] = None) -> EvolutionRecord:
    """dD/dt = -L D, re-symmetrized every step; drift beyond the limit is fatal."""
    if D0.role is not Role.STATE:
        _reject_role("propagate_state", D0)
    n0 = _normalization(D0)
    record = _propagate(
        D0, gen, cfg, -1, lambda D: _state_diagnostics(gen, D, observables), normalization_reference=n0
    )
    return record


def _reject_role(operation: str, field_) -> None:
    raise RoleError(f"{operation} got a {field_.role.value} field", {"operation": operation})


def _hermitian_part(y: np.ndarray, wigner: bool):
    """(projected data, size of the removed part): real symbols, or Hermitian kernels."""
    if wigner:
        if not np.iscomplexobj(y):
            return y, 0.0
        return np.real(y), float(np.abs(np.imag(y)).max())
    sym = 0.5 * (y + np.conj(np.swapaxes(y, -1, -2)))
    return sym, float(np.abs(sym - y).max())


def _propagate(field0, gen: Generator, cfg: IntegratorConfig, sign: int, diagnose,
               normalization_reference: Optional[float] = None) -> EvolutionRecord:
    check_time_step(gen, cfg)
    steps, dt = step_plan(cfg.t_final, cfg.dt)
    wigner = _is_wigner(gen)
    is_state = normalization_reference is not None
    record = EvolutionRecord()

    def snapshot(current, correction):
        values = diagnose(current)
        if is_state:
            values["hermitian_correction"] = correction
        record.record(t, values, current if cfg.keep_snapshots else None)

    t = 0.0
    snapshot(field0, _hermitian_part(np.asarray(field0.data), wigner)[1] if is_state else 0.0)

    if cfg.scheme is Scheme.EXACT_DENSE:
        dense = assemble_dense_generator(gen, template=field0)
        v = field0.flatten()
        propagators: Dict[int, np.ndarray] = {}
        last = 0
        for step in range(1, steps + 1):
            if step % cfg.stride and step != steps:
                continue
            span = step - last
            if span not in propagators:
                propagators[span] = _dense_propagator(dense, span * dt, sign)
            v_next = propagators[span] @ v
            _check_commutation(propagators[span], dense, v, v_next, sign, step * dt)
            v, last, t = v_next, step, step * dt
            current = field0.from_flat(v)
            residual = _hermitian_part(current.data, wigner)[1] if is_state else 0.0
            snapshot(current, residual)
            record.final = current
        if record.final is None:
            record.final = field0
        logger.info(f"Dense propagation to t={cfg.t_final}: {len(propagators)} exponential(s) for {steps} steps")
        return record

    def rhs(y):
        return sign * apply_generator(gen, field0.with_data(y)).data

    y = np.array(field0.data, copy=True)
    worst_correction = 0.0
    stride_correction = 0.0
    for step in range(1, steps + 1):
        y = rk4_step(rhs, y, dt)
        if is_state:
            y, correction = _hermitian_part(y, wigner)
            stride_correction = max(stride_correction, correction)
            worst_correction = max(worst_correction, correction)
            if correction > settings.HERMITIAN_TOL * max(float(np.abs(y).max()), 1e-300):
                logger.warning(f"Hermiticity correction {correction:.3e} at step {step}")
            norm = _normalization(field0.with_data(y))
            drift = abs(norm - normalization_reference)
            if drift > cfg.drift_limit:
                raise NormalizationDriftError(
                    f"normalization drifted by {drift:.3e} at t={step * dt:.6g}",
                    {"t": step * dt, "normalization": norm, "reference": normalization_reference,
                     "limit": cfg.drift_limit, "dt": dt},
                )
            if cfg.rescale and norm != 0.0:
                y = y * (normalization_reference / norm)
        if step % cfg.stride == 0 or step == steps:
            t = step * dt
            snapshot(field0.with_data(y), stride_correction)
            stride_correction = 0.0
    record.final = field0.with_data(y)
    if is_state:
        logger.info(
            f"Propagated state to t={cfg.t_final} in {steps} steps; "
            f"max Hermiticity correction {worst_correction:.3e}, "
            f"final drift {abs(_normalization(record.final) - normalization_reference):.3e}"
        )
    else:
        logger.info(f"Propagated observable to t={cfg.t_final} in {steps} steps")
    return record
