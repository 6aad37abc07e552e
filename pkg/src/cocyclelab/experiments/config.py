# ABOUTME: Pydantic model for experiment configuration documents
# ABOUTME: Validates the measure literal, target selections, horizons and per-command options

import hashlib
import json
import logging
from pathlib import Path
from typing import Annotated, Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    computed_field,
    field_validator,
    model_validator,
)

from cocyclelab.admissible import AdmissibleFn, u_logdist, u_zero
from cocyclelab.errors import ConfigError, InsufficientMassError
from cocyclelab.experiments.ranges import parse_n_list
from cocyclelab.limits import PHI_TARGETS, PSI_TARGETS, Interval, PhiTarget, PsiTarget
from cocyclelab.projgeom import DualProjPoint, ProjPoint, ProjSample
from cocyclelab.randwalk import MeasureSpec, RegularityFit, empirical_stationary, regularity_fit
from cocyclelab.transfer import CircleGrid

logger = logging.getLogger(__name__)

HorizonSpec = str | list[int]


class StrictModel(BaseModel):
    """Base for config blocks: unknown keys are errors."""

    model_config = ConfigDict(extra="forbid")


class AtomModel(StrictModel):
    """One atom of the step distribution: a row-major matrix and its probability."""

    matrix: list[list[float]]
    p: Annotated[float, Field(gt=0.0, le=1.0)]


class UChoice(StrictModel):
    """
    Selection of the admissible function u.

    Attributes:
        kind: "zero" for u ≡ 0, "logdist" for u = log δ(·, y)
        dual: Covector of y, required for "logdist"
        fit_constants: Derive (η_*, A_*) of log δ(·, y) from a regularity fit of ν;
            when false, η_* = A_* = 1
    """

    kind: Literal["zero", "logdist"] = "zero"
    dual: list[float] | None = None
    fit_constants: bool = True

    @model_validator(mode="after")
    def require_dual(self) -> "UChoice":
        if self.kind == "logdist" and not self.dual:
            raise ValueError("u.kind 'logdist' needs a 'dual' covector")
        return self


class IntervalModel(StrictModel):
    """A truncation interval J; omitted ends are infinite."""

    lo: float | None = None
    hi: float | None = None

    def build(self) -> Interval:
        return Interval(
            lo=float("-inf") if self.lo is None else self.lo,
            hi=float("inf") if self.hi is None else self.hi,
        )

    @model_validator(mode="after")
    def check_order(self) -> "IntervalModel":
        if self.lo is not None and self.hi is not None and not self.lo < self.hi:
            raise ValueError(f"Interval needs lo < hi, got [{self.lo}, {self.hi}]")
        return self


class TargetSelection(StrictModel):
    """Named ψ and φ targets and truncation intervals; statistics run over all combinations."""

    psi: list[str] = ["one"]
    phi: list[str] = ["one"]
    intervals: list[IntervalModel] = [IntervalModel(hi=0.0)]

    @field_validator("psi")
    @classmethod
    def validate_psi(cls, v: list[str]) -> list[str]:
        unknown = [name for name in v if name not in PSI_TARGETS]
        if unknown or not v:
            raise ValueError(f"Unknown psi targets {unknown}; known: {sorted(PSI_TARGETS)}")
        return v

    @field_validator("phi")
    @classmethod
    def validate_phi(cls, v: list[str]) -> list[str]:
        unknown = [name for name in v if name not in PHI_TARGETS]
        if unknown or not v:
            raise ValueError(f"Unknown phi targets {unknown}; known: {sorted(PHI_TARGETS)}")
        return v


def _validate_horizons(v: HorizonSpec) -> HorizonSpec:
    try:
        parse_n_list(v)
        return v
    except ValueError as e:
        raise ValueError(f"Invalid horizon list: {e}") from e


class EstimateOptions(StrictModel):
    """Options of the estimate command."""

    horizon: Annotated[int, Field(ge=100)] = 1000
    burnin: Annotated[int, Field(ge=0)] = 200
    stationary_burnin: Annotated[int, Field(ge=1000)] = 1000
    stationary_samples: Annotated[int, Field(ge=1)] = 100_000
    radii: list[float] = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2]
    dual: list[float] | None = None
    ldt_epsilon: Annotated[float, Field(gt=0.0)] = 0.1
    ldt_n_list: HorizonSpec = "10..50+10"
    proximality_steps: Annotated[int, Field(ge=2)] = 2000
    write_trials: bool = False

    @field_validator("ldt_n_list")
    @classmethod
    def validate_ldt_n_list(cls, v: HorizonSpec) -> HorizonSpec:
        return _validate_horizons(v)


class SpectrumOptions(StrictModel):
    """Options of the spectrum command."""

    xi_max: Annotated[float, Field(gt=0.0, le=0.5)] = 0.5
    xi_points: Annotated[int, Field(ge=2)] = 26
    s_values: list[float] = [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3]
    derivative_order: Annotated[int, Field(ge=1, le=5)] = 5
    derivative_step: Annotated[float, Field(ge=1e-3, le=5e-2)] = 0.05
    zeta_t: list[float] = [0.0, 0.05, 0.1, 0.2, 0.3]
    decay_xi: list[float] = [1.0, 2.0, 5.0]
    decay_n_list: HorizonSpec = "0..40+10"
    consistency: bool = True
    scgf_s: list[float] = [-0.2, -0.1, 0.1, 0.2]
    scgf_n: Annotated[int, Field(ge=1)] = 50
    expansion_xi: list[float] = [0.02, 0.05, 0.08, 0.11, 0.14, 0.17, 0.2, 0.23, 0.26, 0.3]
    refine_m: list[int] = [512, 2048]

    @field_validator("decay_n_list")
    @classmethod
    def validate_decay_n_list(cls, v: HorizonSpec) -> HorizonSpec:
        return _validate_horizons(v)

    @field_validator("s_values")
    @classmethod
    def validate_s(cls, v: list[float]) -> list[float]:
        if any(abs(s) > 0.5 for s in v):
            raise ValueError("s_values must lie in [-0.5, 0.5]")
        return v

    @field_validator("scgf_s")
    @classmethod
    def validate_scgf_s(cls, v: list[float]) -> list[float]:
        if any(abs(s) > 0.3 for s in v):
            raise ValueError("scgf_s must lie in [-0.3, 0.3]")
        return v

    @field_validator("expansion_xi")
    @classmethod
    def validate_expansion_xi(cls, v: list[float]) -> list[float]:
        if len(v) < 8 or any(not 0.0 < abs(x) <= 0.3 for x in v):
            raise ValueError("expansion_xi needs at least 8 nonzero values in [-0.3, 0.3]")
        return v

    @field_validator("refine_m")
    @classmethod
    def validate_refine_m(cls, v: list[int]) -> list[int]:
        if len(v) != 2 or not 64 <= v[0] < v[1]:
            raise ValueError("refine_m must be two increasing grid sizes, each at least 64")
        return v


class AdmissibleOptions(StrictModel):
    """Options of the admissible verification suite."""

    samples: Annotated[int, Field(ge=10_000)] = 100_000
    burnin: Annotated[int, Field(ge=1000)] = 1000
    t_grid: list[float] = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0]
    pairs: Annotated[int, Field(ge=1)] = 10_000
    pair_distance: Annotated[float, Field(gt=0.0, le=1.0)] = 0.05
    tail_a_const: Annotated[float, Field(gt=0.0)] = 1.0
    tail_n_list: HorizonSpec = "16..1024x4"

    @field_validator("tail_n_list")
    @classmethod
    def validate_tail_n_list(cls, v: HorizonSpec) -> HorizonSpec:
        return _validate_horizons(v)


class VerifyOptions(StrictModel):
    """Options of the verify suites."""

    llt_psi: str = "triangle"
    llt_t: list[float] = [0.0]
    moderate_exponent: Annotated[float, Field(ge=0.0, lt=0.5)] = 0.25
    moderate_tilt: bool = True
    kernel_deltas: list[float] = [1.0, 0.5, 0.2, 0.1]
    smooth_deltas: list[float] = [0.5, 0.25, 0.125]
    approx_deltas: list[float] = [0.4, 0.2, 0.1]
    admissible: AdmissibleOptions = AdmissibleOptions()

    @field_validator("llt_psi")
    @classmethod
    def validate_llt_psi(cls, v: str) -> str:
        target = PSI_TARGETS.get(v)
        if target is None or target.support is None:
            compact = sorted(k for k, t in PSI_TARGETS.items() if t.support is not None)
            raise ValueError(f"llt_psi must be a compactly supported target: {compact}")
        return v

    @field_validator("kernel_deltas", "smooth_deltas", "approx_deltas")
    @classmethod
    def validate_deltas(cls, v: list[float]) -> list[float]:
        if not v or any(not 0.0 < d <= 1.0 for d in v):
            raise ValueError("Kernel scales must lie in (0, 1]")
        return v


class ExperimentConfig(StrictModel):
    """
    One experiment: a step distribution, targets, horizons and options.

    Attributes:
        measure: Atoms of μ
        dimension: Matrix size; checked against the atoms when given
        x0: Starting direction (default e₁)
        u: Admissible function choice
        targets: ψ, φ and J selections
        n_list: Horizons, as a list or a range string
        trials: Monte Carlo trials per horizon
        seed: Stream seed (mandatory)
        grid_m: Transfer-operator grid size
        grid_order: Interpolation order of the transfer-operator grid
        gamma: Lyapunov exponent, computed when omitted
        rho2: Asymptotic variance, computed when omitted
        output_dir: Where artifacts are written
    """

    measure: Annotated[list[AtomModel], Field(min_length=1)]
    dimension: int | None = None
    x0: list[float] | None = None
    u: UChoice = UChoice()
    targets: TargetSelection = TargetSelection()
    n_list: HorizonSpec = "64..4096x4"
    trials: Annotated[int, Field(ge=1)] = 100_000
    seed: Annotated[int, Field(ge=0, lt=2**64)]
    grid_m: Annotated[int, Field(ge=64)] = 1024
    grid_order: Literal[1, 3] = 1
    gamma: float | None = None
    rho2: Annotated[float, Field(gt=0.0)] | None = None
    output_dir: Path = Path("results")
    estimate: EstimateOptions = EstimateOptions()
    spectrum: SpectrumOptions = SpectrumOptions()
    verify: VerifyOptions = VerifyOptions()

    @field_validator("n_list")
    @classmethod
    def validate_n_list(cls, v: HorizonSpec) -> HorizonSpec:
        return _validate_horizons(v)

    @model_validator(mode="after")
    def check_measure(self) -> "ExperimentConfig":
        """Build μ once so singular matrices and bad weights fail at load time."""
        mu = self.build_measure()
        if self.dimension is not None and self.dimension != mu.dimension:
            raise ValueError(f"dimension is {self.dimension} but the atoms are {mu.dimension}×")
        for name, vector in (("x0", self.x0), ("u.dual", self.u.dual)):
            if vector is not None and len(vector) != mu.dimension:
                raise ValueError(f"{name} has {len(vector)} coordinates, expected {mu.dimension}")
        return self

    @computed_field  # type: ignore[prop-decorator]
    @property
    def horizons(self) -> list[int]:
        """Parsed n_list."""
        return parse_n_list(self.n_list)

    def build_measure(self) -> MeasureSpec:
        return MeasureSpec.from_literal([(a.matrix, a.p) for a in self.measure])

    @property
    def measure_dimension(self) -> int:
        return len(self.measure[0].matrix)

    def start_point(self) -> ProjPoint:
        if self.x0 is None:
            return ProjPoint.basis(0, self.measure_dimension)
        return ProjPoint.from_vector(self.x0)

    def dual_point(self) -> DualProjPoint:
        """y for log δ(·, y), falling back to the estimate block and then to e₂*."""
        covector = self.u.dual or self.estimate.dual
        if covector is None:
            return DualProjPoint.basis(1, self.measure_dimension)
        return DualProjPoint.from_covector(covector)

    def fit_regularity(self, nu: ProjSample | None = None) -> RegularityFit | None:
        """
        Regularity fit of ν around H_y, or None when it yields no positive exponent.

        Without nu, a stationary sample is drawn with the estimate block's settings.
        """
        if nu is None:
            opts = self.estimate
            nu = empirical_stationary(
                self.build_measure(),
                self.start_point(),
                opts.stationary_burnin,
                opts.stationary_samples,
                self.seed,
            )
        try:
            fit = regularity_fit(nu, self.dual_point(), self.estimate.radii)
        except InsufficientMassError as e:
            logger.warning(f"Regularity fit unavailable, using eta_* = A_* = 1: {e}")
            return None
        if not fit.eta_hat > 0.0:
            logger.warning(f"Regularity fit has eta_hat={fit.eta_hat}, using eta_* = A_* = 1")
            return None
        return fit

    def admissible(
        self, fit: RegularityFit | None = None, nu: ProjSample | None = None
    ) -> AdmissibleFn:
        """
        Build u. For "logdist" with fit_constants, (η_*, A_*) come from fit, or
        from a fresh regularity fit of nu (or of a new stationary sample).
        """
        if self.u.kind == "zero":
            return u_zero()
        if not self.u.fit_constants:
            return u_logdist(self.dual_point())
        if fit is None:
            fit = self.fit_regularity(nu)
        return u_logdist(self.dual_point(), fit=fit)

    def psi_targets(self) -> list[PsiTarget]:
        return [PSI_TARGETS[name] for name in self.targets.psi]

    def phi_targets(self) -> list[PhiTarget]:
        return [PHI_TARGETS[name] for name in self.targets.phi]

    def intervals(self) -> list[Interval]:
        return [j.build() for j in self.targets.intervals]

    def grid(self) -> CircleGrid:
        return CircleGrid(m=self.grid_m, order=self.grid_order)


def _line_of_field(text: str, loc: tuple) -> int | None:
    """1-based line of the first occurrence of the innermost named key of a location."""
    for part in reversed(loc):
        if isinstance(part, str):
            index = text.find(f'"{part}"')
            if index >= 0:
                return text.count("\n", 0, index) + 1
    return None


def parse_config(text: str) -> ExperimentConfig:
    """
    Parse and validate a JSON experiment document.

    Raises:
        ConfigError: With the line for JSON syntax errors, and the dotted
            field path plus its line for schema errors
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON: {e.msg} (column {e.colno})", line=e.lineno) from e
    if not isinstance(raw, dict):
        raise ConfigError("Experiment config must be a JSON object", line=1)

    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        loc = tuple(first["loc"])
        field = ".".join(str(part) for part in loc) or None
        raise ConfigError(first["msg"], line=_line_of_field(text, loc), field=field) from e


def load_config(path: Path) -> ExperimentConfig:
    """
    Read and validate an experiment config file.

    Raises:
        ConfigError: If the file cannot be read or is invalid
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e.strerror}") from e
    config = parse_config(text)
    logger.info(f"Loaded config {path} (seed={config.seed}, horizons={config.horizons})")
    return config


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON dump (sorted keys, compact separators)."""
    canonical = json.dumps(
        config.model_dump(mode="json"), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
