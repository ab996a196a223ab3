"""Experiment schemas - everything an experiment file can say."""

from __future__ import annotations
from enum import Enum
from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PDEKind(str, Enum):
    """The three equation families."""
    FOKKER_PLANCK = "fokker_planck"
    TRANSPORT_DIFFUSION = "transport_diffusion"
    HAMILTON_JACOBI = "hamilton_jacobi"


class Scheme(str, Enum):
    """Time integrators."""
    IMEX_EULER = "imex_euler"
    IMEX2 = "imex2"
    RK3 = "rk3"  # explicit SSP-RK3, used whenever epsilon = 0


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class MeshKind(str, Enum):
    UNIFORM = "uniform"
    GEOMETRIC = "geometric"


class TheoremId(str, Enum):
    """Every check the lab can run."""
    THM_STABILITY_L2 = "thm_stability_L2"
    THM_STABILITY_GRAD = "thm_stability_grad"
    THM_MAIN2_LP = "thm_main2_Lp"
    COR_DIVLRLQ_DUAL = "cor_divLrLq_dual"
    COR_UNIQUENESS_FP = "cor_uniqueness_fp"
    THM_ONE_SIDED_LINF = "thm_one_sided_Linf"
    THM_HJLIP_CD = "thm_hjlip_cd"
    THM_SEMICONCAVE_CD = "thm_semiconcave_cd"
    THM_SUPERQUADRATIC_CD = "thm_superquadratic_cd"
    COR_GRADIENT_CD = "cor_gradient_cd"
    THM_L1_CD = "thm_L1_cd"
    THM_II_LP_CD = "thm_ii_Lp_cd"
    THM_III_AS_CD = "thm_iii_AS_cd"
    VAL_HEAT_KERNEL = "val_heat_kernel"
    VAL_COLE_HOPF = "val_cole_hopf"
    BENTON_DEMO = "benton_demo"


Exponent = Union[int, float, str]


def _exponent_text(value: Any) -> str:
    if isinstance(value, bool):
        raise ValueError("exponent cannot be a boolean")
    if isinstance(value, float) and value == float("inf"):
        return "inf"
    return str(value).strip()


class SolverConfig(BaseModel):
    """Time-stepping parameters shared by all equation families."""
    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    epsilon: float = Field(default=1.0, ge=0.0)
    dt: float = Field(default=1e-3, gt=0.0)
    t_start: float = Field(default=0.0, ge=0.0)
    t_end: float = Field(default=0.1, gt=0.0)
    mesh: MeshKind = MeshKind.UNIFORM
    geometric_steps: int = Field(default=400, ge=1)
    record_every: int = Field(default=1, ge=1)
    scheme: Scheme = Scheme.IMEX_EULER
    direction: Direction = Direction.FORWARD
    cfl: float = Field(default=0.5, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_interval(self) -> "SolverConfig":
        if self.t_end <= self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if self.mesh == MeshKind.GEOMETRIC and self.t_start <= 0:
            raise ValueError("geometric mesh requires t_start > 0")
        return self

    def effective_scheme(self) -> Scheme:
        """Explicit RK3 whenever there is no diffusion to treat implicitly."""
        return Scheme.RK3 if self.epsilon == 0 else self.scheme

    def refined(self) -> "SolverConfig":
        """Same run with half the base step and twice the geometric steps."""
        return self.model_copy(update={"dt": self.dt / 2, "geometric_steps": self.geometric_steps * 2,
                                       "record_every": self.record_every * 2})


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(default=1, ge=1, le=2)
    n_points: int = Field(default=64, ge=4)


class DriftKind(str, Enum):
    ZERO = "zero"
    DIVERGENCE_FREE = "divergence_free"
    LRLQ = "lrlq"
    ONE_SIDED = "one_sided"


class DriftConfig(BaseModel):
    """Drift family and its parameters."""
    model_config = ConfigDict(extra="forbid")

    kind: DriftKind = DriftKind.ZERO
    amplitude: float = 1.0
    q: str = "inf"
    r: str = "2"
    margin: float = 0.5
    c1: float = Field(default=0.0, ge=0.0)
    c2: float = 0.0
    fejer_order: int = Field(default=8, ge=2)
    shift: Optional[list[float]] = None
    negative_part: bool = False  # use ||[div b]^-||_q in the constants

    @field_validator("q", "r", mode="before")
    @classmethod
    def coerce_exponent(cls, v: Any) -> str:
        return _exponent_text(v)


class HamiltonianKind(str, Enum):
    QUADRATIC = "quadratic"
    POWER = "power"
    CUSTOM_SMOOTH = "custom_smooth"  # radial f(|p|^2) given as an expression in s


class HamiltonianSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: HamiltonianKind = HamiltonianKind.QUADRATIC
    gamma: float = Field(default=2.0, gt=1.0)
    expression: Optional[str] = None  # f(s) with s = |p|^2, custom_smooth only


class DataKind(str, Enum):
    BUMP = "bump"          # normalized Gaussian density
    COSINE = "cosine"      # 1 + amplitude cos(2 pi x)
    RANDOM = "random"      # seeded band-limited field
    VALLEY = "valley"      # narrow negative spike, the engineered hypothesis violation


class DataSpec(BaseModel):
    """Initial/terminal data and sources."""
    model_config = ConfigDict(extra="forbid")

    kind: DataKind = DataKind.RANDOM
    amplitude: float = 0.5
    width: float = Field(default=0.1, gt=0.0)
    max_mode: int = Field(default=3, ge=1)
    difference: float = 0.3       # sup-size of the data difference between paired runs
    source: float = 0.0           # sup-size of the source in the first run
    source_difference: float = 0.0
    laplacian_bound: Optional[float] = None  # semi-superharmonicity bound the run must respect


class SweepAxes(BaseModel):
    """Axes of the run grid; every combination becomes one run point."""
    model_config = ConfigDict(extra="forbid")

    epsilon: list[float] = Field(default_factory=list)
    margin: list[float] = Field(default_factory=list)
    p: list[str] = Field(default_factory=list)
    c1: list[float] = Field(default_factory=list)
    gamma: list[float] = Field(default_factory=list)

    @field_validator("p", mode="before")
    @classmethod
    def coerce_exponents(cls, v: Any) -> Any:
        return [_exponent_text(x) for x in v] if isinstance(v, list) else v

    def axes(self) -> dict[str, list[Any]]:
        """Non-empty axes in a fixed order."""
        return {name: list(values) for name, values in self.model_dump().items() if values}


class CheckSpec(BaseModel):
    """Per-check options."""
    model_config = ConfigDict(extra="forbid")

    p: list[str] = Field(default_factory=lambda: ["2"])
    interpolated_s: list[float] = Field(default_factory=list)  # indices in (1, 2) between mass and L^2
    divb_q: str = "inf"
    aronson_serrin_q: str = "4"
    aronson_serrin_r: str = "inf"
    gn_restarts: int = Field(default=200, ge=1)
    gn_max_iter: int = Field(default=100, ge=1)
    gn_validation: int = Field(default=1000, ge=0)
    perturbation_scales: list[float] = Field(default_factory=lambda: [1.0])
    chain_p: list[str] = Field(default_factory=lambda: ["4", "16"])
    semiconcave_c1: float = Field(default=0.0, ge=0.0)
    semiconcave_c2: Optional[float] = None  # measured from the run when unset
    max_drift_speed: float = 1e3

    @field_validator("p", "chain_p", mode="before")
    @classmethod
    def coerce_exponents(cls, v: Any) -> Any:
        return [_exponent_text(x) for x in v] if isinstance(v, list) else v

    @field_validator("divb_q", "aronson_serrin_q", "aronson_serrin_r", mode="before")
    @classmethod
    def coerce_exponent(cls, v: Any) -> str:
        return _exponent_text(v)


class Experiment(BaseModel):
    """One experiment: a suite of checks over seeds and sweep points."""
    model_config = ConfigDict(extra="forbid")

    id: str
    suite: list[TheoremId] = Field(default_factory=list)
    grid: GridSpec = Field(default_factory=GridSpec)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    drift: DriftConfig = Field(default_factory=DriftConfig)
    hamiltonian: HamiltonianSpec = Field(default_factory=HamiltonianSpec)
    data: DataSpec = Field(default_factory=DataSpec)
    seeds: list[int] = Field(default_factory=lambda: [0])
    sweep: SweepAxes = Field(default_factory=SweepAxes)
    checks: CheckSpec = Field(default_factory=CheckSpec)
    refinement: bool = False
    expect_status: Optional[str] = None  # a negative control names the status it must produce

    def summary(self) -> str:
        """One-line summary."""
        suite = ", ".join(t.value for t in self.suite) or "empty suite"
        return f"{self.id}: {suite} on {self.grid.dim}D N={self.grid.n_points}, {len(self.seeds)} seed(s)"


class ExperimentFile(BaseModel):
    """Top level of an experiment YAML file."""
    model_config = ConfigDict(extra="forbid")

    experiments: list[Experiment] = Field(default_factory=list)
