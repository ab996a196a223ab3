"""Suite handlers - build the runs a check needs and hand them to the verifier."""

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from src.models.experiment import (
    Direction,
    DriftKind,
    Experiment,
    HamiltonianKind,
    PDEKind,
    TheoremId,
)
from src.models.manifest import RunEventKind
from src.models.reports import EstimateReport
from src.systems import data as lab_data
from src.systems.benton import benton_demo
from src.systems.event_log import RunLog
from src.systems.exponents import conjugate, format_exponent, to_exponent
from src.systems.fields import (
    DriftSpec,
    Hamiltonian,
    custom_hamiltonian,
    make_divfree_drift,
    make_LrLq_drift,
    make_one_sided_singular_drift,
    make_zero_drift,
    power_hamiltonian,
    quadratic_hamiltonian,
)
from src.systems.grid import Grid, Trajectory
from src.systems.solvers import cole_hopf_solution, solve, solve_adjoint_pair, solve_hj_pair
from src.systems.verify import (
    FPRun,
    GNInputs,
    HJPairRun,
    TransportPairRun,
    TransportRun,
    check_cole_hopf,
    check_cor_dual,
    check_cor_gradient,
    check_heat_kernel,
    check_thm_hjlip,
    check_thm_ii_and_iii,
    check_thm_L1,
    check_thm_main2,
    check_thm_main2_interpolated,
    check_thm_one_sided,
    check_thm_semiconcave,
    check_thm_stability,
    check_thm_superquadratic,
    check_uniqueness_fp,
    gn_inputs,
    smoothed_sign,
    smoothing_width,
)
from src.tools.registry import SuiteRegistry

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunPoint:
    """One (seed, sweep point) of an experiment, with the sweep already applied."""
    experiment: Experiment
    seed: int
    sweep: dict[str, Any] = field(default_factory=dict)
    run_id: str = ""
    refined: bool = False


def build_drift(exp: Experiment, grid: Grid, seed: int) -> DriftSpec:
    cfg = exp.drift
    if cfg.kind == DriftKind.ZERO:
        return make_zero_drift(grid.dim)
    if cfg.kind == DriftKind.DIVERGENCE_FREE:
        return make_divfree_drift(grid, seed, cfg.amplitude)
    if cfg.kind == DriftKind.LRLQ:
        # mollified at the base resolution so refinement solves the same drift
        drift = make_LrLq_drift(grid, cfg.q, cfg.r, cfg.margin, seed, cfg.amplitude,
                                mollify_scale=4.0 / exp.grid.n_points,
                                t_start=exp.solver.t_start, t_end=exp.solver.t_end)
    else:
        drift = make_one_sided_singular_drift(grid, cfg.c1, cfg.c2, seed, cfg.fejer_order, cfg.shift)
    drift.params["negative_part"] = cfg.negative_part
    return drift


def build_hamiltonian(exp: Experiment) -> Hamiltonian:
    if exp.hamiltonian.kind == HamiltonianKind.POWER:
        return power_hamiltonian(exp.hamiltonian.gamma)
    if exp.hamiltonian.kind == HamiltonianKind.CUSTOM_SMOOTH:
        return custom_hamiltonian(exp.hamiltonian.expression or "")
    return quadratic_hamiltonian()


class RunContext:
    """Everything one run point solves, built lazily and shared by the checks of its suite."""

    def __init__(self, point: RunPoint, log: Optional[RunLog] = None):
        self.point = point
        self.experiment = point.experiment
        self.seed = point.seed
        self.run_id = point.run_id
        self.log = log or RunLog()
        n = self.experiment.grid.n_points * (2 if point.refined else 1)
        self.grid = Grid(self.experiment.grid.dim, n)
        self.cfg = self.experiment.solver.refined() if point.refined else self.experiment.solver
        self.trajectories: dict[str, Trajectory] = {}
        self._memo: dict[str, Any] = {}

    def memo(self, key: str, build: Callable[[], Any]) -> Any:
        if key not in self._memo:
            self._memo[key] = build()
        return self._memo[key]

    def _solved(self, label: str, traj: Trajectory) -> Trajectory:
        self.trajectories[label] = traj
        self.log.add(RunEventKind.SOLVED, self.run_id, label, samples=len(traj), t_end=float(traj.t_end))
        return traj

    # -- models --------------------------------------------------------------------

    @property
    def drift(self) -> DriftSpec:
        return self.memo("drift", lambda: build_drift(self.experiment, self.grid, self.seed))

    @property
    def hamiltonian(self) -> Hamiltonian:
        return self.memo("hamiltonian", lambda: build_hamiltonian(self.experiment))

    def drift_record(self) -> Optional[dict[str, Any]]:
        """The drift's record if any check built it."""
        if "drift" not in self._memo:
            return None
        return self.drift.record.model_dump(mode="json")

    def gn(self, q: Optional[str] = None) -> GNInputs:
        """Interpolation inputs at q, by default the drift's own exponent."""
        q = q if q is not None else self.drift.params.get("q", "inf")
        checks = self.experiment.checks
        return self.memo(f"gn:{format_exponent(q)}", lambda: gn_inputs(
            self.grid, q, checks.gn_restarts, checks.gn_max_iter, checks.gn_validation))

    @property
    def sources(self) -> tuple:
        return self.memo("sources", lambda: lab_data.sources(self.grid.dim, self.experiment.data, self.seed))

    # -- runs ----------------------------------------------------------------------

    def fp_run(self, scale: float = 0.0) -> FPRun:
        """Fokker-Planck from the configured density, optionally perturbed."""
        def build() -> FPRun:
            rho0 = lab_data.initial_density(self.grid, self.experiment.data, self.seed)
            label = "rho"
            if scale:
                rho0 = rho0 + lab_data.perturbation(self.grid, self.experiment.data, self.seed, scale)
                label = f"rho_perturbed_{scale:g}"
            traj = solve(PDEKind.FOKKER_PLANCK, self.grid, self.drift, rho0, self.cfg, label=label)
            return FPRun(self._solved(label, traj), self.drift, self.cfg, self.run_id)

        return self.memo(f"fp:{scale!r}", build)

    def transport_run(self) -> TransportRun:
        """Backward transport-diffusion from the terminal datum with source f1."""
        def build() -> TransportRun:
            cfg = self.cfg.model_copy(update={"direction": Direction.BACKWARD})
            f1, _ = self.sources
            v_T = lab_data.terminal_datum(self.grid, self.experiment.data, self.seed)
            traj = solve(PDEKind.TRANSPORT_DIFFUSION, self.grid, self.drift, v_T, cfg, f1, label="v")
            return TransportRun(self._solved("v", traj), self.drift, cfg, f1, self.run_id)

        return self.memo("transport", build)

    def transport_pair(self) -> TransportPairRun:
        """Two forward transport-diffusion solutions from g1 and g1 + perturbation."""
        def build() -> TransportPairRun:
            cfg = self.cfg.model_copy(update={"direction": Direction.FORWARD})
            f1, f2 = self.sources
            g1 = lab_data.terminal_datum(self.grid, self.experiment.data, self.seed)
            g2 = g1 + lab_data.perturbation(self.grid, self.experiment.data, self.seed)
            u1 = solve(PDEKind.TRANSPORT_DIFFUSION, self.grid, self.drift, g1, cfg, f1, label="u1")
            u2 = solve(PDEKind.TRANSPORT_DIFFUSION, self.grid, self.drift, g2, cfg, f2, label="u2")
            return TransportPairRun(self._solved("u1", u1), self._solved("u2", u2), self.drift, cfg, f1, f2, self.run_id)

        return self.memo("transport_pair", build)

    def hj_solutions(self) -> tuple[Trajectory, Trajectory]:
        def build() -> tuple[Trajectory, Trajectory]:
            f1, f2 = self.sources
            g1 = lab_data.terminal_datum(self.grid, self.experiment.data, self.seed)
            g2 = g1 + lab_data.perturbation(self.grid, self.experiment.data, self.seed)
            u1, u2 = solve_hj_pair(self.grid, self.hamiltonian, g1, g2, self.cfg, f1, f2)
            return self._solved("u1", u1), self._solved("u2", u2)

        return self.memo("hj", build)

    def hj_pair(self, rho_tau: Optional[np.ndarray] = None, key: str = "dual") -> HJPairRun:
        """Both HJ solutions with the dual density pushed forward from t_start."""
        def build() -> HJPairRun:
            u1, u2 = self.hj_solutions()
            f1, f2 = self.sources
            rho = lab_data.dual_density(self.grid) if rho_tau is None else rho_tau
            result = solve_adjoint_pair(self.grid, self.hamiltonian, u1.values[-1], u2.values[-1], rho, self.cfg,
                                        f1, f2, pair=(u1, u2))
            self._solved(f"rho_{key}", result.rho)
            return HJPairRun(result, self.hamiltonian, self.cfg, f1, f2, self.run_id)

        return self.memo(f"hj_pair:{key}", build)


class SuiteHandlers:
    """Handlers for all checks, one method per theorem id."""

    def __init__(self, registry: Optional[SuiteRegistry] = None):
        self.registry = registry or SuiteRegistry()
        for theorem_id, handler in {
            TheoremId.VAL_HEAT_KERNEL: self.heat_kernel,
            TheoremId.VAL_COLE_HOPF: self.cole_hopf,
            TheoremId.THM_STABILITY_L2: self.stability_l2,
            TheoremId.THM_STABILITY_GRAD: self.stability_grad,
            TheoremId.THM_MAIN2_LP: self.main2,
            TheoremId.COR_DIVLRLQ_DUAL: self.dual,
            TheoremId.COR_UNIQUENESS_FP: self.uniqueness,
            TheoremId.THM_ONE_SIDED_LINF: self.one_sided,
            TheoremId.THM_HJLIP_CD: self.hjlip,
            TheoremId.THM_SEMICONCAVE_CD: self.semiconcave,
            TheoremId.THM_SUPERQUADRATIC_CD: self.superquadratic,
            TheoremId.COR_GRADIENT_CD: self.gradient,
            TheoremId.THM_L1_CD: self.l1,
            TheoremId.THM_II_LP_CD: self.lp_divergence,
            TheoremId.THM_III_AS_CD: self.lp_aronson_serrin,
            TheoremId.BENTON_DEMO: self.benton,
        }.items():
            self.registry.set_handler(theorem_id, handler)

    def run(self, theorem_id: TheoremId, ctx: RunContext) -> list[EstimateReport]:
        reports = self.registry.execute(theorem_id, ctx)
        for report in reports:
            report.run_id = ctx.run_id
            report.sweep = dict(ctx.point.sweep)
            ctx.log.add(RunEventKind.CHECK, ctx.run_id, report.summary(), theorem_id=theorem_id.value,
                        status=report.status.value)
        return reports

    # -- solver validations ------------------------------------------------------------

    def heat_kernel(self, ctx: RunContext) -> list[EstimateReport]:
        if ctx.drift.kind != "zero":
            return [EstimateReport.hypothesis_failed(TheoremId.VAL_HEAT_KERNEL, "heat-kernel oracle needs b = 0")]
        return [check_heat_kernel(ctx.fp_run().rho, ctx.cfg.epsilon)]

    def cole_hopf(self, ctx: RunContext) -> list[EstimateReport]:
        u1, _ = ctx.hj_solutions()
        exact = cole_hopf_solution(ctx.grid, u1.values[-1], ctx.cfg.epsilon, u1.times, ctx.cfg.t_end)
        return [check_cole_hopf(u1, exact, ctx.cfg.epsilon)]

    # -- Fokker-Planck ----------------------------------------------------------------

    def _stability(self, ctx: RunContext) -> list[EstimateReport]:
        return ctx.memo("stability", lambda: check_thm_stability(ctx.fp_run(), ctx.gn()))

    def stability_l2(self, ctx: RunContext) -> list[EstimateReport]:
        return [self._stability(ctx)[0]]

    def stability_grad(self, ctx: RunContext) -> list[EstimateReport]:
        return [self._stability(ctx)[1]]

    def main2(self, ctx: RunContext) -> list[EstimateReport]:
        run, gn = ctx.fp_run(), ctx.gn()
        reports = [check_thm_main2(run, p, gn) for p in ctx.experiment.checks.p]
        reports += [check_thm_main2_interpolated(run, s, gn) for s in ctx.experiment.checks.interpolated_s]
        return reports

    def dual(self, ctx: RunContext) -> list[EstimateReport]:
        exponents: list[str] = []
        for p in ctx.experiment.checks.p:
            for value in (p, format_exponent(conjugate(to_exponent(p)))):
                if value not in exponents:
                    exponents.append(value)
        run, gn = ctx.transport_run(), ctx.gn()
        return [check_cor_dual(run, p, gn) for p in exponents]

    def uniqueness(self, ctx: RunContext) -> list[EstimateReport]:
        base, gn = ctx.fp_run(), ctx.gn()
        return [check_uniqueness_fp(base, ctx.fp_run(scale), gn) for scale in ctx.experiment.checks.perturbation_scales]

    def one_sided(self, ctx: RunContext) -> list[EstimateReport]:
        return [check_thm_one_sided(ctx.transport_pair(), ctx.experiment.checks.chain_p)]

    # -- Hamilton-Jacobi ---------------------------------------------------------------

    def hjlip(self, ctx: RunContext) -> list[EstimateReport]:
        return [check_thm_hjlip(ctx.hj_pair(), ctx.experiment.checks.max_drift_speed)]

    def semiconcave(self, ctx: RunContext) -> list[EstimateReport]:
        checks = ctx.experiment.checks
        return [check_thm_semiconcave(ctx.hj_pair(), checks.semiconcave_c1, checks.semiconcave_c2)]

    def superquadratic(self, ctx: RunContext) -> list[EstimateReport]:
        return [check_thm_superquadratic(ctx.hj_pair(), ctx.experiment.data.laplacian_bound)]

    def gradient(self, ctx: RunContext) -> list[EstimateReport]:
        return [check_cor_gradient(ctx.hj_pair())]

    def l1(self, ctx: RunContext) -> list[EstimateReport]:
        u1, u2 = ctx.hj_solutions()
        w_tau = u1.values[0] - u2.values[0]
        delta = smoothing_width(w_tau)
        if delta == 0.0:
            report = EstimateReport.assess(TheoremId.THM_L1_CD, 0.0, 0.0, epsilon=ctx.cfg.epsilon,
                                           notes=["identical solutions; nothing to pair against"])
            return [report]
        run = ctx.hj_pair(smoothed_sign(w_tau, delta), key="sign")
        return [check_thm_L1(run, delta)]

    def lp_divergence(self, ctx: RunContext) -> list[EstimateReport]:
        checks = ctx.experiment.checks
        run = ctx.hj_pair()
        gn = ctx.gn(checks.divb_q)
        return [check_thm_ii_and_iii(run, "div_LrLq", p, gn=gn, q=checks.divb_q) for p in checks.p]

    def lp_aronson_serrin(self, ctx: RunContext) -> list[EstimateReport]:
        checks = ctx.experiment.checks
        run = ctx.hj_pair()
        Q, R = checks.aronson_serrin_q, checks.aronson_serrin_r
        gn = ctx.gn(format_exponent(to_exponent(Q) / 2))
        return [check_thm_ii_and_iii(run, "AS_LRLQ", p, gn=gn, Q=Q, R=R) for p in checks.p]

    # -- inviscid example -----------------------------------------------------------------

    def benton(self, ctx: RunContext) -> list[EstimateReport]:
        demo = ctx.memo("benton", benton_demo)
        return [demo.report.model_copy(deep=True)]
