"""Configuration LP: exact feasibility at integer ``T`` by column generation.

The restricted master is a phase-1 LP. Every generated column ``(i, C)``
gets a variable ``x_{iC} >= 0`` and every job an artificial shortfall
``s_j >= 0``::

    minimise   sum_j s_j
    subject to sum_C x_{iC}              <= 1   for every machine i
               sum_{C ∋ j} x_{iC} + s_j  >= 1   for every job j

The dual prices of the machine rows (``y``) and job rows (``z``) feed one
knapsack per machine; a column is improving when its knapsack profit exceeds
``y_i``. When no improving column is left and the shortfall is positive, the
duals are an infeasibility certificate. They are rationalised and repaired so
that the certificate holds in exact arithmetic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from scipy.optimize import linprog

from .core import GuardExceeded, Instance, IterationCapExceeded
from .solver_config import SolverConfig, load_solver_config

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]

CONFIGURATION_GUARD = 20
BRUTEFORCE_COLUMN_GUARD = 100_000
_DUAL_DENOMINATOR_LIMIT = 1_000_000
_WEIGHT_EPSILON = 1e-12
_PRICING_EPSILON = 1e-12


class ColumnGenerationError(IterationCapExceeded):
    """Raised when column generation does not settle within its iteration cap."""

    def __init__(self, T: int, iterations: int) -> None:
        super().__init__(f"column generation at T={T} exceeded {iterations} iterations")
        self.T = T
        self.iterations = iterations


class LpNumericsError(RuntimeError):
    """Raised when the floating-point master cannot be confirmed exactly."""


@dataclass(frozen=True, order=True)
class Configuration:
    """A set of jobs for one machine; ``jobs`` is sorted ascending."""

    machine: int
    jobs: Tuple[int, ...]

    def size(self, instance: Instance) -> int:
        return sum(instance.jobs[job].size for job in self.jobs)

    def to_mapping(self) -> Dict[str, Any]:
        return {"machine": self.machine, "jobs": list(self.jobs)}


@dataclass(frozen=True)
class DualPrices:
    """Machine prices ``y`` and job prices ``z`` of the configuration LP dual."""

    y: Tuple[Number, ...]
    z: Tuple[Number, ...]

    def __post_init__(self) -> None:
        if any(value < 0 for value in self.y) or any(value < 0 for value in self.z):
            raise ValueError("dual prices must be non-negative")

    @property
    def gap(self) -> Number:
        """``sum(z) - sum(y)``; positive for an infeasibility certificate."""

        return sum(self.z) - sum(self.y)

    def to_mapping(self) -> Dict[str, Any]:
        return {"y": [_json_number(v) for v in self.y], "z": [_json_number(v) for v in self.z]}


@dataclass(frozen=True)
class DualCheck:
    """Outcome of :func:`verify_dual`.

    ``holds`` is true when every machine's knapsack bound is dominated by its
    price; ``negative`` reports ``sum(y) < sum(z)``.
    """

    holds: bool
    negative: bool
    violated_machines: Tuple[int, ...] = ()

    @property
    def certifies_infeasibility(self) -> bool:
        return self.holds and self.negative

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class LpVerdict:
    """Feasibility verdict of the configuration LP at ``T``."""

    feasible: bool
    T: int
    columns: Tuple[Tuple[Configuration, Fraction], ...] = ()
    dual: Optional[DualPrices] = None
    iterations: int = 0

    def to_mapping(self, include_columns: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {"feasible": self.feasible, "T": self.T}
        if include_columns:
            data["columns"] = [
                {**column.to_mapping(), "weight": str(weight)} for column, weight in self.columns
            ]
            if self.dual is not None:
                data["dual"] = self.dual.to_mapping()
        return data


@dataclass(frozen=True)
class OptLpSearch:
    """Result of the integer binary search for ``OPT_LP``."""

    value: int
    probes: Tuple[Tuple[int, bool], ...] = field(default_factory=tuple)


def _json_number(value: Number) -> Union[int, float, str]:
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else str(value)
    return value


# ---------------------------------------------------------------------------
# Pricing
# ---------------------------------------------------------------------------


def _knapsack(
    items: Sequence[Tuple[int, int, Number]],
    capacity: int,
) -> Tuple[Number, Tuple[int, ...]]:
    """0/1 knapsack over ``(job, size, profit)`` items given in ascending job order.

    ``best[w]`` is the preferred subset of total size at most ``w``: higher
    profit, then fewer items, then the lexicographically smallest id tuple.
    Items arrive in ascending id order, so appending keeps tuples sorted and
    the preference order is stable under extension.
    """

    if capacity <= 0:
        return 0, ()
    best: List[Tuple[Number, Tuple[int, ...]]] = [(0, ())] * (capacity + 1)
    for job, size, profit in items:
        if size > capacity or profit <= 0:
            continue
        for weight in range(capacity, size - 1, -1):
            base_profit, base_jobs = best[weight - size]
            candidate = (base_profit + profit, base_jobs + (job,))
            if _prefer(candidate, best[weight]):
                best[weight] = candidate
    return best[capacity]


def _prefer(
    candidate: Tuple[Number, Tuple[int, ...]],
    incumbent: Tuple[Number, Tuple[int, ...]],
) -> bool:
    if candidate[0] != incumbent[0]:
        return candidate[0] > incumbent[0]
    if len(candidate[1]) != len(incumbent[1]):
        return len(candidate[1]) < len(incumbent[1])
    return candidate[1] < incumbent[1]


def price_knapsack(
    instance: Instance,
    machine: int,
    capacity: int,
    profit: Sequence[Number],
) -> Tuple[Configuration, Number]:
    """Return the max-profit configuration of *machine* within *capacity*.

    Parameters
    ----------
    instance:
        Instance providing sizes and eligibility.
    machine:
        Machine whose eligible jobs form the item set.
    capacity:
        Integer capacity, normally the target makespan ``T``.
    profit:
        Per-job profits indexed by job id. ``int``, ``float`` and
        :class:`~fractions.Fraction` values are all supported; only positive
        profits are worth packing.

    Returns
    -------
    tuple
        The configuration and its total profit.
    """

    if len(profit) != instance.job_count:
        raise ValueError(f"expected {instance.job_count} profits, got {len(profit)}")
    items = [
        (job_id, instance.jobs[job_id].size, profit[job_id])
        for job_id in instance.eligible_jobs(machine)
    ]
    total, jobs = _knapsack(items, capacity)
    return Configuration(machine=machine, jobs=jobs), total


# ---------------------------------------------------------------------------
# Restricted master
# ---------------------------------------------------------------------------


class ColumnPool:
    """Columns generated for one instance, shared across feasibility tests.

    A column that fits at ``T`` fits at every larger target, so the pool hands
    back whatever fits the current ``T``.
    """

    def __init__(self, instance: Instance) -> None:
        self.instance = instance
        self._sizes: Dict[Configuration, int] = {}

    def __len__(self) -> int:
        return len(self._sizes)

    def __contains__(self, column: object) -> bool:
        return column in self._sizes

    def add(self, column: Configuration) -> None:
        if column not in self._sizes:
            self._sizes[column] = column.size(self.instance)

    def fitting(self, T: int) -> List[Configuration]:
        """Pooled columns of size at most *T*, in the order they were added."""

        return [column for column, size in self._sizes.items() if size <= T]


def _pricing_items(instance: Instance) -> List[Tuple[np.ndarray, np.ndarray]]:
    items = []
    for machine in range(instance.machine_count):
        eligible = np.asarray(instance.eligible_jobs(machine), dtype=np.int64)
        sizes = np.asarray([instance.jobs[job].size for job in eligible], dtype=np.int64)
        items.append((eligible, sizes))
    return items


def _price_float(
    eligible: np.ndarray,
    sizes: np.ndarray,
    capacity: int,
    z: np.ndarray,
) -> Tuple[float, Tuple[int, ...]]:
    """Vectorised knapsack over float prices; used inside column generation.

    Ties keep the earlier packing, so the result is deterministic. Exact
    checks go through :func:`price_knapsack` instead.
    """

    best = np.zeros(capacity + 1)
    taken = np.zeros((len(eligible), capacity + 1), dtype=bool)
    for index, (job, size) in enumerate(zip(eligible, sizes)):
        profit = z[job]
        if size > capacity or profit <= 0:
            continue
        candidate = best[: capacity + 1 - size] + profit
        improves = candidate > best[size:] + _PRICING_EPSILON
        best[size:] = np.where(improves, candidate, best[size:])
        taken[index, size:] = improves

    chosen: List[int] = []
    weight = capacity
    for index in range(len(eligible) - 1, -1, -1):
        if taken[index, weight]:
            chosen.append(int(eligible[index]))
            weight -= int(sizes[index])
    return float(best[capacity]), tuple(sorted(chosen))


@dataclass(frozen=True)
class _MasterSolution:
    shortfall: float
    weights: np.ndarray
    y: np.ndarray
    z: np.ndarray


def _solve_master(instance: Instance, columns: Sequence[Configuration]) -> _MasterSolution:
    machines = instance.machine_count
    jobs = instance.job_count
    column_count = len(columns)

    cost = np.concatenate([np.zeros(column_count), np.ones(jobs)])
    matrix = np.zeros((machines + jobs, column_count + jobs))
    for index, column in enumerate(columns):
        matrix[column.machine, index] = 1.0
        for job in column.jobs:
            matrix[machines + job, index] = -1.0
    for job in range(jobs):
        matrix[machines + job, column_count + job] = -1.0
    rhs = np.concatenate([np.ones(machines), -np.ones(jobs)])

    result = linprog(cost, A_ub=matrix, b_ub=rhs, bounds=(0, None), method="highs")
    if result.status != 0:
        raise LpNumericsError(f"restricted master failed: {result.message}")

    marginals = np.asarray(result.ineqlin.marginals, dtype=float)
    return _MasterSolution(
        shortfall=float(result.fun),
        weights=np.asarray(result.x[:column_count], dtype=float),
        y=np.maximum(-marginals[:machines], 0.0),
        z=np.maximum(-marginals[machines:], 0.0),
    )


def _initial_columns(instance: Instance, T: int) -> List[Configuration]:
    columns = [Configuration(machine=i, jobs=()) for i in range(instance.machine_count)]
    for job in instance.jobs:
        if job.size > T:
            continue
        for machine in job.eligible_sorted:
            columns.append(Configuration(machine=machine, jobs=(job.id,)))
    return columns


def _feasible_verdict(
    instance: Instance,
    T: int,
    columns: Sequence[Configuration],
    solution: _MasterSolution,
    config: SolverConfig,
    iterations: int,
) -> LpVerdict:
    support: List[Tuple[Configuration, Fraction]] = []
    for column, weight in zip(columns, solution.weights):
        if weight > _WEIGHT_EPSILON:
            support.append((column, Fraction(float(weight)).limit_denominator(_DUAL_DENOMINATOR_LIMIT)))

    tolerance = Fraction(config.residual_tol)
    machine_use = [Fraction(0)] * instance.machine_count
    coverage = [Fraction(0)] * instance.job_count
    for column, weight in support:
        if column.size(instance) > T:
            raise LpNumericsError(f"column {column} exceeds T={T}")
        machine_use[column.machine] += weight
        for job in column.jobs:
            coverage[job] += weight
    if any(use > 1 + tolerance for use in machine_use) or any(
        cover < 1 - tolerance for cover in coverage
    ):
        raise LpNumericsError(f"feasible weights at T={T} violate the LP constraints")
    return LpVerdict(feasible=True, T=T, columns=tuple(support), iterations=iterations)


def exact_certificate(
    instance: Instance,
    T: int,
    y: Sequence[float],
    z: Sequence[float],
) -> DualPrices:
    """Turn floating duals into exact rational prices that satisfy every knapsack bound."""

    z_exact = tuple(
        max(Fraction(float(value)).limit_denominator(_DUAL_DENOMINATOR_LIMIT), Fraction(0))
        for value in z
    )
    y_exact: List[Fraction] = []
    for machine, value in enumerate(y):
        price = max(Fraction(float(value)).limit_denominator(_DUAL_DENOMINATOR_LIMIT), Fraction(0))
        _, bound = price_knapsack(instance, machine, T, z_exact)
        y_exact.append(max(price, Fraction(bound)))
    return DualPrices(y=tuple(y_exact), z=z_exact)


def _infeasible_verdict(
    instance: Instance,
    T: int,
    solution: _MasterSolution,
    iterations: int,
) -> LpVerdict:
    dual = exact_certificate(instance, T, solution.y, solution.z)
    if not dual.gap > 0:
        raise LpNumericsError(
            f"shortfall {solution.shortfall:.3g} at T={T} but the repaired dual has gap {dual.gap}"
        )
    return LpVerdict(feasible=False, T=T, dual=dual, iterations=iterations)


def _oversized_job_verdict(instance: Instance, T: int) -> Optional[LpVerdict]:
    for job in instance.jobs:
        if job.size > T:
            z = tuple(1 if other.id == job.id else 0 for other in instance.jobs)
            dual = DualPrices(y=(0,) * instance.machine_count, z=z)
            logger.debug("Job %s (p=%s) fits no machine at T=%s", job.id, job.size, T)
            return LpVerdict(feasible=False, T=T, dual=dual)
    return None


def clp_feasible(
    instance: Instance,
    T: int,
    *,
    config: Optional[SolverConfig] = None,
    pool: Optional[ColumnPool] = None,
) -> LpVerdict:
    """Decide configuration-LP feasibility at integer *T*.

    Columns from *pool* that fit at *T* seed the master, and every column
    priced here is added to it.

    Raises
    ------
    ColumnGenerationError
        When pricing keeps finding columns past the configured cap.
    LpNumericsError
        When the floating-point verdict cannot be confirmed exactly.
    """

    config = config or load_solver_config()
    if T < 0:
        raise ValueError(f"target makespan must be non-negative, got {T}")
    if pool is not None and pool.instance is not instance:
        raise ValueError("column pool belongs to another instance")
    if instance.job_count == 0:
        return LpVerdict(feasible=True, T=T)

    oversized = _oversized_job_verdict(instance, T)
    if oversized is not None:
        return oversized

    columns = _initial_columns(instance, T)
    known: Set[Configuration] = set(columns)
    if pool is not None:
        for column in pool.fitting(T):
            if column not in known:
                columns.append(column)
                known.add(column)
    items = _pricing_items(instance)

    for iteration in range(1, config.colgen_iteration_cap + 1):
        solution = _solve_master(instance, columns)
        if solution.shortfall <= config.residual_tol:
            logger.debug("T=%s feasible after %s master solves (%s columns)", T, iteration, len(columns))
            return _feasible_verdict(instance, T, columns, solution, config, iteration)

        added = 0
        for machine, (eligible, sizes) in enumerate(items):
            value, jobs = _price_float(eligible, sizes, T, solution.z)
            column = Configuration(machine=machine, jobs=jobs)
            if value > solution.y[machine] + config.reduced_cost_tol and column not in known:
                columns.append(column)
                known.add(column)
                if pool is not None:
                    pool.add(column)
                added += 1
        logger.debug(
            "T=%s iteration %s: shortfall=%.6g, %s new columns",
            T,
            iteration,
            solution.shortfall,
            added,
        )
        if added == 0:
            return _infeasible_verdict(instance, T, solution, iteration)

    logger.error("Column generation at T=%s hit the cap of %s iterations", T, config.colgen_iteration_cap)
    raise ColumnGenerationError(T, config.colgen_iteration_cap)


def lp_lower_bound(instance: Instance) -> int:
    """``max(max p, ceil(sum p / m))``; no smaller ``T`` can be LP-feasible."""

    if instance.job_count == 0:
        return 0
    return max(instance.max_size, -(-instance.total_size // instance.machine_count))


def opt_lp_search(
    instance: Instance,
    *,
    config: Optional[SolverConfig] = None,
) -> OptLpSearch:
    """Binary search the least feasible integer ``T`` on ``[lp_lower_bound, sum p]``.

    All probes share one column pool.
    """

    if instance.job_count == 0:
        return OptLpSearch(value=0)
    config = config or load_solver_config()
    pool = ColumnPool(instance)
    low, high = lp_lower_bound(instance), instance.total_size
    probes: List[Tuple[int, bool]] = []
    while low < high:
        middle = (low + high) // 2
        feasible = clp_feasible(instance, middle, config=config, pool=pool).feasible
        probes.append((middle, feasible))
        if feasible:
            high = middle
        else:
            low = middle + 1
    logger.info("OPT_LP = %s (%s probes, %s pooled columns)", low, len(probes), len(pool))
    return OptLpSearch(value=low, probes=tuple(probes))


def opt_lp(instance: Instance, *, config: Optional[SolverConfig] = None) -> int:
    """Return ``OPT_LP``, the least integer ``T`` at which the LP is feasible."""

    return opt_lp_search(instance, config=config).value


# ---------------------------------------------------------------------------
# Small-instance oracles
# ---------------------------------------------------------------------------


def enumerate_configurations(instance: Instance, machine: int, T: int) -> List[Configuration]:
    """Return every configuration of *machine* at *T*, the empty one included."""

    eligible = instance.eligible_jobs(machine)
    if len(eligible) > CONFIGURATION_GUARD:
        raise GuardExceeded(
            f"machine {machine} has {len(eligible)} eligible jobs (guard {CONFIGURATION_GUARD})"
        )
    configurations: List[Configuration] = []
    for count in range(len(eligible) + 1):
        for subset in combinations(eligible, count):
            if sum(instance.jobs[job].size for job in subset) <= T:
                configurations.append(Configuration(machine=machine, jobs=subset))
    return configurations


def clp_feasible_bruteforce(
    instance: Instance,
    T: int,
    *,
    config: Optional[SolverConfig] = None,
) -> LpVerdict:
    """Solve the full configuration LP with every column; an oracle for tests."""

    config = config or load_solver_config()
    if instance.job_count == 0:
        return LpVerdict(feasible=True, T=T)
    columns: List[Configuration] = []
    for machine in range(instance.machine_count):
        columns.extend(enumerate_configurations(instance, machine, T))
        if len(columns) > BRUTEFORCE_COLUMN_GUARD:
            raise GuardExceeded(f"more than {BRUTEFORCE_COLUMN_GUARD} configurations at T={T}")
    solution = _solve_master(instance, columns)
    if solution.shortfall <= config.residual_tol:
        return _feasible_verdict(instance, T, columns, solution, config, 1)
    return _infeasible_verdict(instance, T, solution, 1)


def verify_dual(instance: Instance, T: int, prices: DualPrices) -> DualCheck:
    """Check ``y_i >= max knapsack_i(z)`` on every machine and report ``sum y < sum z``.

    Integer and :class:`~fractions.Fraction` prices are checked exactly.
    """

    if len(prices.y) != instance.machine_count or len(prices.z) != instance.job_count:
        raise ValueError("dual price vectors do not match the instance dimensions")
    violated: List[int] = []
    for machine in range(instance.machine_count):
        _, bound = price_knapsack(instance, machine, T, prices.z)
        if bound > prices.y[machine]:
            violated.append(machine)
    negative = sum(prices.y) < sum(prices.z)
    return DualCheck(holds=not violated, negative=negative, violated_machines=tuple(violated))
