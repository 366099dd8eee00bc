import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from qcdyn.core.config import settings
from qcdyn.core.exceptions import ConfigurationError, GridMismatchError, QCDynException, SolverError
from qcdyn.schemas.scenario import Method, PsiFamily, Scenario
from qcdyn.schemas.table import TimeSeriesTable
from qcdyn.services.generator import GeneratorConfigRep, GeneratorWignerRep
from qcdyn.services.heisenberg import (
    CanonicalOperatorState,
    evolve_canonical_operators,
    evolve_wigner_symbols,
    symbol_record,
)
from qcdyn.services.hybrid_model import (
    ClassicalDistribution,
    ClassicalPhasePoint,
    HybridHamiltonian,
    WaveFunction,
    build_hamiltonian,
    named_observable,
    phase_space_gaussian,
    uncorrelated_pure_state,
)
from qcdyn.services.meanfield import EhrenfestState, MeanFieldState, ehrenfest_evolve, evolve_distribution_meanfield
from qcdyn.services.potentials import Potential, make_potential
from qcdyn.services.propagators import EvolutionRecord, IntegratorConfig, Scheme, propagate_state
from qcdyn.services.wigner import named_symbol, wigner_of_pure_state
from qcdyn.utils.csv_io import write_table
from qcdyn.utils.grids import PhaseSpaceGrid, SpatialGrid
from qcdyn.utils.plotting import emit_plot
from qcdyn.utils.scenario_parser import dump_scenario
from qcdyn.utils.snapshot_io import can_snapshot, load_snapshot, save_snapshot

logger = logging.getLogger(__name__)

# CSV column -> diagnostic recorded by the solvers
_COLUMN_SOURCES = {"H": "energy"}


def scenario_hash(scenario: Scenario) -> str:
    return hashlib.sha256(dump_scenario(scenario).encode("utf-8")).hexdigest()[:16]


@dataclass
class SimulationResult:
    table: TimeSeriesTable
    record: EvolutionRecord
    csv_path: Optional[Path] = None
    snapshot_paths: List[Path] = field(default_factory=list)
    plot_path: Optional[Path] = None


class SimulationService:
    """Builds the model objects a scenario describes and dispatches to the solver of its method."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.hash = scenario_hash(scenario)
        self._hamiltonian: Optional[HybridHamiltonian] = None

    @property
    def method(self) -> Method:
        return self.scenario.method.name

    def grids(self) -> Tuple[PhaseSpaceGrid, SpatialGrid]:
        g = self.scenario.grid
        pgrid = PhaseSpaceGrid(
            SpatialGrid(g.q_min, g.q_max, g.n_q, g.q_boundary),
            SpatialGrid(g.p_min, g.p_max, g.n_p, g.p_boundary),
        )
        return pgrid, SpatialGrid(g.xi_min, g.xi_max, g.n_xi, g.xi_boundary)

    def potential(self) -> Potential:
        section = self.scenario.potential
        return make_potential(section.kind.value, **section.parameters())

    def hamiltonian(self) -> HybridHamiltonian:
        if self._hamiltonian is None:
            pgrid, qgrid = self.grids()
            physics = self.scenario.physics
            self._hamiltonian = build_hamiltonian(pgrid, qgrid, self.potential(), physics.hbar, physics.kinetic_scheme)
        return self._hamiltonian

    def initial_point(self) -> ClassicalPhasePoint:
        return ClassicalPhasePoint(self.scenario.initial.q0, self.scenario.initial.p0)

    def smearing(self) -> Tuple[float, float]:
        pgrid, _ = self.grids()
        initial = self.scenario.initial
        sigma_q = initial.sigma_q if initial.sigma_q is not None else settings.SMEARING_CELLS * pgrid.dq
        sigma_p = initial.sigma_p if initial.sigma_p is not None else settings.SMEARING_CELLS * pgrid.dp
        return sigma_q, sigma_p

    def initial_wave_function(self) -> WaveFunction:
        _, qgrid = self.grids()
        initial = self.scenario.initial
        if initial.psi is PsiFamily.GAUSSIAN:
            return WaveFunction.gaussian(
                qgrid, initial.psi_center, initial.psi_width, initial.psi_momentum, self.scenario.physics.hbar
            )
        if initial.psi is PsiFamily.SAMPLES:
            real = np.asarray(initial.samples_real, dtype=float)
            imag = np.zeros_like(real) if initial.samples_imag is None else np.asarray(initial.samples_imag, dtype=float)
            if real.shape != (qgrid.n,) or imag.shape != (qgrid.n,):
                raise ConfigurationError(
                    f"psi samples need {qgrid.n} values", {"real": real.size, "imag": imag.size}
                )
            return WaveFunction.from_samples(qgrid, real + 1j * imag)

        state = load_snapshot(initial.snapshot)
        psi = state.psi if isinstance(state, EhrenfestState) else state
        if not isinstance(psi, WaveFunction):
            raise ConfigurationError(
                f"snapshot {initial.snapshot} holds a {type(state).__name__}, not a wave function"
            )
        if psi.grid != qgrid:
            raise GridMismatchError(
                "snapshot wave function lives on another quantum grid",
                {"snapshot": psi.grid.descriptor(), "scenario": qgrid.descriptor()},
            )
        return psi

    def integrator(self, scheme: Scheme = Scheme.RK4) -> IntegratorConfig:
        section = self.scenario.integrator
        return IntegratorConfig(
            dt=section.dt,
            t_final=section.t_final,
            scheme=scheme,
            stride=section.stride,
            safety=section.safety,
            rescale=section.rescale,
            drift_limit=section.drift_limit,
        )

    def _plain_observables(self) -> List[str]:
        return [name for name in self.scenario.observables.columns if name not in ("H", "correlation_norm")]

    def _run_full(self, wigner: bool, scheme: Scheme) -> EvolutionRecord:
        H = self.hamiltonian()
        physics = self.scenario.physics
        config = GeneratorConfigRep(H, physics.q_derivative, physics.p_derivative)
        psi0 = self.initial_wave_function()
        if wigner:
            gen = GeneratorWignerRep(config)
            D0 = wigner_of_pure_state(H.grid, self.initial_point(), psi0, self.smearing(), H.hbar)
            observables = {name: named_symbol(name, H) for name in self._plain_observables()}
        else:
            gen = config
            D0 = uncorrelated_pure_state(H.grid, self.initial_point(), psi0, self.smearing())
            observables = {name: named_observable(name, H) for name in self._plain_observables()}
        return propagate_state(D0, gen, self.integrator(scheme), observables)

    def _run_meanfield(self) -> EvolutionRecord:
        H = self.hamiltonian()
        physics = self.scenario.physics
        dist = ClassicalDistribution.create(H.grid, phase_space_gaussian(H.grid, self.initial_point(), self.smearing()))
        s0 = MeanFieldState.create(dist, self.initial_wave_function().projector())
        return evolve_distribution_meanfield(s0, H, self.integrator(), physics.q_derivative, physics.p_derivative)

    def _run_ehrenfest(self) -> EvolutionRecord:
        section = self.scenario.method
        s0 = EhrenfestState(self.initial_point(), self.initial_wave_function())
        return ehrenfest_evolve(
            s0, self.hamiltonian(), self.integrator(), section.quantum_step.value, section.composition.value
        )

    def _run_symbols(self) -> EvolutionRecord:
        H = self.hamiltonian()
        D0 = wigner_of_pure_state(H.grid, self.initial_point(), self.initial_wave_function(), self.smearing(), H.hbar)
        traj = evolve_wigner_symbols(D0, H.potential, self.integrator(), self.scenario.method.support_threshold)
        return symbol_record(traj, D0, H.potential, self._plain_observables())

    def _run_operators(self) -> EvolutionRecord:
        _, qgrid = self.grids()
        hbar = self.scenario.physics.hbar
        s0 = CanonicalOperatorState.initial(self.initial_point(), qgrid, hbar)
        return evolve_canonical_operators(s0, self.potential(), self.integrator(), self.initial_wave_function())

    def solve(self) -> EvolutionRecord:
        dispatch = {
            Method.FULL_QCLE_CONFIG: lambda: self._run_full(False, Scheme.RK4),
            Method.FULL_QCLE_WIGNER: lambda: self._run_full(True, Scheme.RK4),
            Method.ORACLE_DENSE: lambda: self._run_full(False, Scheme.EXACT_DENSE),
            Method.MEANFIELD_DISTRIBUTION: self._run_meanfield,
            Method.EHRENFEST: self._run_ehrenfest,
            Method.HEISENBERG_SYMBOLS: self._run_symbols,
            Method.HEISENBERG_OPERATORS: self._run_operators,
        }
        context = {"method": self.method.value, "scenario_hash": self.hash}
        logger.info(f"Running scenario {self.hash} with method {self.method.value}")
        try:
            return dispatch[self.method]()
        except QCDynException as e:
            e.details.update(context)
            logger.error(f"Scenario {self.hash} failed: {e.message}")
            raise
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
            logger.error(f"Scenario {self.hash} failed in the solver: {e}")
            raise SolverError(f"solver failed: {e}", context) from e

    def metadata(self) -> Dict[str, str]:
        pgrid, qgrid = self.grids()
        return {
            "version": settings.VERSION,
            "method": self.method.value,
            "scenario_hash": self.hash,
            "seed": str(self.scenario.run.seed),
            "grid.q": pgrid.q_grid.digest(),
            "grid.p": pgrid.p_grid.digest(),
            "grid.xi": qgrid.digest(),
            "scenario": dump_scenario(self.scenario),
        }

    def tabulate(self, record: EvolutionRecord) -> TimeSeriesTable:
        series = {}
        for name in self.scenario.observables.columns:
            source = _COLUMN_SOURCES.get(name, name)
            if source not in record.diagnostics:
                raise ConfigurationError(
                    f"method {self.method.value} does not provide column '{name}'",
                    {"available": record.columns},
                )
            series[name] = record.diagnostics[source]
        return TimeSeriesTable.from_series(record.times, series, self.metadata())

    def output_dir(self) -> Path:
        if settings.OUTPUT_DIR_OVERRIDE:
            return Path(settings.OUTPUT_DIR_OVERRIDE)
        return Path(self.scenario.output.directory or settings.OUTPUT_DIR)

    def run(self, write: bool = True) -> SimulationResult:
        record = self.solve()
        table = self.tabulate(record)
        result = SimulationResult(table=table, record=record)
        if not write:
            return result

        output = self.scenario.output
        directory = self.output_dir()
        result.csv_path = write_table(table, directory / f"{output.name}.csv")
        if output.snapshots:
            final = record.final
            if final is not None and can_snapshot(final):
                result.snapshot_paths.append(save_snapshot(final, directory / f"{output.name}_final.qcds"))
            else:
                logger.warning(f"Method {self.method.value} has no snapshot-able final state")
        if output.plot:
            result.plot_path = emit_plot(table, table.columns[1:], directory / f"{output.name}.svg", self.method.value)
        return result


def run(scenario: Scenario, write: bool = True) -> SimulationResult:
    return SimulationService(scenario).run(write)


def force_oracle(scenario: Scenario) -> Scenario:
    """Same scenario on the dense exact propagator."""
    if scenario.method.name not in (Method.FULL_QCLE_CONFIG, Method.ORACLE_DENSE):
        raise ConfigurationError(
            f"the dense oracle reproduces full_qcle_config runs, not {scenario.method.name.value}"
        )
    method = scenario.method.model_copy(update={"name": Method.ORACLE_DENSE})
    return scenario.model_copy(update={"method": method})
