"""
Data models for sigprice.

Process specifications, the simulation grid, payoff variants, report rows
and the scenario file all live here. Union members are told apart by their
``kind`` (processes) or ``variant`` (payoffs) literal.
"""

from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, root_validator, validator
from scipy.special import expit

from sigprice.signature import LiftKind


# ==================== Processes ====================

class BrownianSpec(BaseModel):
    """
    Correlated d-dimensional Brownian motion.

    ``correlation`` defaults to the identity; it must be symmetric with unit
    diagonal. Positive definiteness is checked when the Cholesky factor is
    taken at simulation time.
    """
    kind: Literal["brownian"] = "brownian"
    dim: int = Field(1, ge=1, description="Number of Brownian components")
    correlation: Optional[List[List[float]]] = Field(
        None, description="d x d correlation matrix (identity when omitted)"
    )
    initial: Optional[List[float]] = Field(None, description="Starting point (zeros when omitted)")

    @validator("correlation")
    def _check_correlation(cls, value, values):
        if value is None:
            return value
        dim = values.get("dim", 1)
        matrix = np.asarray(value, dtype=float)
        if matrix.shape != (dim, dim):
            raise ValueError(f"correlation must be {dim}x{dim}, got shape {matrix.shape}")
        if not np.allclose(matrix, matrix.T, atol=1e-12):
            raise ValueError("correlation must be symmetric")
        if not np.all(np.diag(matrix) == 1.0):
            raise ValueError("correlation must have a unit diagonal")
        return value

    @validator("initial")
    def _check_initial(cls, value, values):
        if value is not None and len(value) != values.get("dim", 1):
            raise ValueError(f"initial has {len(value)} entries, expected {values.get('dim', 1)}")
        return value

    @property
    def path_dim(self) -> int:
        return self.dim

    def correlation_matrix(self) -> np.ndarray:
        if self.correlation is None:
            return np.eye(self.dim)
        return np.asarray(self.correlation, dtype=float)

    def initial_values(self) -> Tuple[float, ...]:
        return tuple(self.initial) if self.initial is not None else (0.0,) * self.dim


class OUSpec(BaseModel):
    """Pair of Ornstein-Uhlenbeck processes dY^i = -a_i Y^i dt + sigma_i dB^i."""
    kind: Literal["ou"] = "ou"
    mean_reversion: Tuple[float, float] = Field(..., description="a_1, a_2 > 0 (1/time)")
    volatility: Tuple[float, float] = Field(..., description="sigma_1, sigma_2 >= 0")
    correlation: float = Field(0.0, ge=-1.0, le=1.0, description="Correlation of the drivers")
    initial: Tuple[float, float] = Field((0.0, 0.0), description="Y^1_0, Y^2_0")

    @validator("mean_reversion")
    def _positive_rates(cls, value):
        if min(value) <= 0:
            raise ValueError(f"mean reversion rates must be > 0, got {value}")
        return value

    @validator("volatility")
    def _non_negative_vols(cls, value):
        if min(value) < 0:
            raise ValueError(f"volatilities must be >= 0, got {value}")
        return value

    @property
    def path_dim(self) -> int:
        return 2

    def initial_values(self) -> Tuple[float, ...]:
        return tuple(self.initial)


class LogisticOUSpec(BaseModel):
    """
    Capacity factor C and normalized price S as logistic transforms of an
    OU pair: C = expit(Y^1 + shift_1), S = expit(Y^2 + shift_2). Both stay
    in (0, 1).
    """
    kind: Literal["logistic_ou"] = "logistic_ou"
    ou: OUSpec
    shifts: Tuple[float, float] = Field((0.0, 0.0), description="Additive shifts before expit")

    @property
    def path_dim(self) -> int:
        return 2

    def initial_values(self) -> Tuple[float, ...]:
        return tuple(float(v) for v in expit(np.add(self.ou.initial, self.shifts)))


ProcessSpec = Union[BrownianSpec, OUSpec, LogisticOUSpec]


class SimulationGrid(BaseModel):
    """Uniform grid 0 = t_0 < ... < t_M = T."""
    horizon: float = Field(..., gt=0, description="T > 0")
    steps: int = Field(..., ge=1, description="M >= 1")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)


# ==================== Payoffs ====================

class AsianCall(BaseModel):
    """max(<21, X> - K, 0) on a one-dimensional process (increment of the time integral)."""
    variant: Literal["asian_call"] = "asian_call"
    strike: float = 0.0
    smoothing: float = Field(2.0, gt=0, description="N_sharp of the smoothed max x*sigmoid(Nx)")
    order: int = Field(5, ge=0, description="Series order M")
    bound_constant: float = Field(1.0, gt=0, description="C of the coefficient-decay condition")


class AsianSpreadCall(BaseModel):
    """max(int_0^T (X^1 - X^2) ds - K, 0) on a two-dimensional process."""
    variant: Literal["asian_spread_call"] = "asian_spread_call"
    strike: float = 0.0
    smoothing: float = Field(2.0, gt=0)
    order: int = Field(5, ge=0)
    bound_constant: float = Field(1.0, gt=0, description="C of the coefficient-decay condition")


class Spread(BaseModel):
    """max(X^1_T - c X^2_T, 0)."""
    variant: Literal["spread"] = "spread"
    conversion: float = Field(1.0, description="Conversion factor c")
    smoothing: float = Field(2.0, gt=0)
    order: int = Field(5, ge=0)
    bound_constant: float = Field(1.0, gt=0, description="C of the coefficient-decay condition")


class QuantoPutCall(BaseModel):
    """max(int V ds - K, 0) * max(L - int P ds, 0) on the pair (V, P)."""
    variant: Literal["quanto"] = "quanto"
    volume_strike: float = Field(..., description="K")
    price_strike: float = Field(..., description="L")
    smoothing: float = Field(2.0, gt=0)
    order: int = Field(5, ge=0)
    bound_constant: float = Field(1.0, gt=0, description="C of the coefficient-decay condition")


class QualityFactor(BaseModel):
    """Expected quality factor of a (capacity, price) pair, truncated at (M, N)."""
    variant: Literal["quality_factor"] = "quality_factor"
    m_order: int = Field(4, ge=0, description="Truncation M of the capacity series")
    n_order: int = Field(4, ge=0, description="Truncation N of the price series")
    bound_constant: float = Field(1.0, gt=0, description="C of the coefficient-decay condition")


PayoffSpec = Union[AsianCall, AsianSpreadCall, Spread, QuantoPutCall, QualityFactor]


# ==================== Reports ====================

class PriceReport(BaseModel):
    """Result of one pricing method."""
    price: float
    std_error: float = Field(..., ge=0)
    method: Literal["correlator_expansion", "direct_mc", "moment_expansion"]
    variant: str
    terms: int = Field(0, description="Number of multi-indices in the expansion")
    orders: Dict[str, int] = Field(default_factory=dict, description="Truncation orders used")
    n_paths: int = 0
    seed: Optional[int] = None
    series_tail: Optional[float] = Field(
        None,
        description="Bound on the mean |f_N - f| over the pairings, built without the polynomial coefficients",
    )
    radius: Optional[float] = Field(None, description="Convergence radius of the scalar series")
    smoothing_bias: Optional[float] = Field(
        None, description="sup |x sigmoid(Nx) - max(x, 0)| per smoothed max, included in series_tail"
    )
    warnings: List[str] = Field(default_factory=list)


class ConvergenceRow(BaseModel):
    order: int
    expansion: float
    expansion_se: float
    direct: float
    direct_se: float
    gap: float
    tail: Optional[float] = None
    smoothing_bias: Optional[float] = None
    bound: Optional[float] = None


class CorrelatorRow(BaseModel):
    request_id: str
    value: float
    std_error: float
    n_paths: int


# ==================== Scenario ====================

class CorrelatorRequestSpec(BaseModel):
    """One correlator in a scenario; words use the weighted-word text grammar."""
    id: str
    words: List[str] = Field(..., min_items=1)
    multi_index: List[int]

    @root_validator(skip_on_failure=True)
    def _lengths_match(cls, values):
        if len(values["words"]) != len(values["multi_index"]):
            raise ValueError(
                f"{len(values['words'])} words but multi_index has {len(values['multi_index'])} entries"
            )
        if min(values["multi_index"]) < 0:
            raise ValueError("multi_index entries must be >= 0")
        return values


class CorrelatorBlock(BaseModel):
    depth: Optional[int] = Field(None, ge=1, description="Lift depth (longest word when omitted)")
    time_enhanced: bool = True
    requests: List[CorrelatorRequestSpec] = Field(..., min_items=1)


class OutputSpec(BaseModel):
    dir: str = "out"
    paths_to_write: int = Field(1, ge=0, description="Sample paths written by 'simulate'")


class Scenario(BaseModel):
    """A scenario file (schema ``sigprice/1``)."""
    schema_: Literal["sigprice/1"] = Field(..., alias="schema")
    name: str = "scenario"
    process: ProcessSpec
    grid: SimulationGrid
    lift: LiftKind = LiftKind.STRATONOVICH
    payoff: Optional[PayoffSpec] = None
    correlators: Optional[CorrelatorBlock] = None
    convergence_orders: Optional[List[int]] = None
    n_paths: int = Field(10000, ge=2)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    output: OutputSpec = Field(default_factory=OutputSpec)

    class Config:
        allow_population_by_field_name = True

    @root_validator(skip_on_failure=True)
    def _words_fit(cls, values):
        from sigprice.algebra import parse_weighted_word

        block = values.get("correlators")
        if block is None:
            return values
        alphabet = values["process"].path_dim + (1 if block.time_enhanced else 0)
        longest = 0
        for request in block.requests:
            for text in request.words:
                longest = max(longest, parse_weighted_word(text, alphabet).max_length())
        if block.depth is not None and block.depth < longest:
            raise ValueError(f"correlators.depth {block.depth} is below the longest word length {longest}")
        return values
