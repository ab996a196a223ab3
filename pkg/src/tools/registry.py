"""Suite registry - maps every theorem id to its description and handler."""

from __future__ import annotations
from enum import Enum
from typing import TYPE_CHECKING, Callable, Optional

from pydantic import BaseModel

from src.models.experiment import PDEKind, TheoremId
from src.models.reports import EstimateReport

if TYPE_CHECKING:
    from src.tools.suites import RunContext

SuiteHandler = Callable[["RunContext"], list[EstimateReport]]


class RunKind(str, Enum):
    """What a suite has to solve before it can check anything."""
    NONE = "none"
    FOKKER_PLANCK = "fokker_planck"
    FP_PAIR = "fp_pair"
    TRANSPORT = "transport"
    TRANSPORT_PAIR = "transport_pair"
    HJ_PAIR = "hj_pair"


class Suite(BaseModel):
    """A registered check."""
    theorem_id: TheoremId
    description: str
    run_kind: RunKind
    pde: Optional[PDEKind] = None
    viscosity_independent: bool = False  # the bound must not move when epsilon is swept


class SuiteRegistry:
    """Registry of all available checks."""

    def __init__(self) -> None:
        self._suites: dict[TheoremId, Suite] = {}
        self._handlers: dict[TheoremId, SuiteHandler] = {}
        self._register_core_suites()

    def _register_core_suites(self) -> None:
        """Register every theorem id."""
        fp, td, hj = PDEKind.FOKKER_PLANCK, PDEKind.TRANSPORT_DIFFUSION, PDEKind.HAMILTON_JACOBI
        for suite in [
            Suite(theorem_id=TheoremId.VAL_HEAT_KERNEL, run_kind=RunKind.FOKKER_PLANCK, pde=fp,
                  description="Fokker-Planck solver against exact heat-kernel decay"),
            Suite(theorem_id=TheoremId.VAL_COLE_HOPF, run_kind=RunKind.HJ_PAIR, pde=hj,
                  description="quadratic HJ solver against the Cole-Hopf solution"),
            Suite(theorem_id=TheoremId.THM_STABILITY_L2, run_kind=RunKind.FOKKER_PLANCK, pde=fp,
                  description="L2 bound for Fokker-Planck with div b in a mixed Lebesgue class"),
            Suite(theorem_id=TheoremId.THM_STABILITY_GRAD, run_kind=RunKind.FOKKER_PLANCK, pde=fp,
                  description="space-time gradient bound for Fokker-Planck"),
            Suite(theorem_id=TheoremId.THM_MAIN2_LP, run_kind=RunKind.FOKKER_PLANCK, pde=fp,
                  description="L^{2p} bound for nonnegative densities"),
            Suite(theorem_id=TheoremId.COR_DIVLRLQ_DUAL, run_kind=RunKind.TRANSPORT, pde=td,
                  description="L^p bound for the backward transport-diffusion equation"),
            Suite(theorem_id=TheoremId.COR_UNIQUENESS_FP, run_kind=RunKind.FP_PAIR, pde=fp,
                  description="contraction of Fokker-Planck differences"),
            Suite(theorem_id=TheoremId.THM_ONE_SIDED_LINF, run_kind=RunKind.TRANSPORT_PAIR, pde=td,
                  viscosity_independent=True,
                  description="sup-norm dependence under a one-sided divergence bound"),
            Suite(theorem_id=TheoremId.THM_HJLIP_CD, run_kind=RunKind.HJ_PAIR, pde=hj, viscosity_independent=True,
                  description="sup-norm dependence for Lipschitz HJ solutions"),
            Suite(theorem_id=TheoremId.THM_SEMICONCAVE_CD, run_kind=RunKind.HJ_PAIR, pde=hj,
                  viscosity_independent=True, description="sup-norm dependence for semiconcave HJ solutions"),
            Suite(theorem_id=TheoremId.THM_SUPERQUADRATIC_CD, run_kind=RunKind.HJ_PAIR, pde=hj,
                  viscosity_independent=True, description="sup-norm dependence for superquadratic Hamiltonians"),
            Suite(theorem_id=TheoremId.COR_GRADIENT_CD, run_kind=RunKind.HJ_PAIR, pde=hj,
                  description="L2 gradient dependence from the sup bound"),
            Suite(theorem_id=TheoremId.THM_L1_CD, run_kind=RunKind.HJ_PAIR, pde=hj,
                  description="L1 dependence through a smoothed-sign dual datum"),
            Suite(theorem_id=TheoremId.THM_II_LP_CD, run_kind=RunKind.HJ_PAIR, pde=hj,
                  description="L^p dependence with [div b]^- in L^q"),
            Suite(theorem_id=TheoremId.THM_III_AS_CD, run_kind=RunKind.HJ_PAIR, pde=hj,
                  description="L^p dependence with b in the Aronson-Serrin class"),
            Suite(theorem_id=TheoremId.BENTON_DEMO, run_kind=RunKind.NONE,
                  description="non-uniqueness of a.e. solutions of the inviscid equation"),
        ]:
            self.register(suite)

    def register(self, suite: Suite) -> None:
        """Register a suite."""
        self._suites[suite.theorem_id] = suite

    def set_handler(self, theorem_id: TheoremId, handler: SuiteHandler) -> None:
        """Set the handler function for a suite."""
        if theorem_id not in self._suites:
            raise ValueError(f"Unknown suite: {theorem_id}")
        self._handlers[theorem_id] = handler

    def get(self, theorem_id: TheoremId) -> Optional[Suite]:
        return self._suites.get(theorem_id)

    def get_handler(self, theorem_id: TheoremId) -> Optional[SuiteHandler]:
        return self._handlers.get(theorem_id)

    def list_suites(self) -> list[Suite]:
        """List all registered suites."""
        return list(self._suites.values())

    def execute(self, theorem_id: TheoremId, ctx: "RunContext") -> list[EstimateReport]:
        """Run a suite by id."""
        handler = self._handlers.get(theorem_id)
        if not handler:
            raise ValueError(f"No handler registered for suite: {theorem_id.value}")
        return handler(ctx)
