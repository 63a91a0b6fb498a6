"""Critical-vulnerability search, robustness metrics and sweep drivers.

k-CV: the size-k attack set whose removal (re-deriving every arsenal)
maximizes the defender's optimal objective, found by exhaustive
enumeration over all k-subsets of the attack pool behind a subproblem
budget -- the combination count explodes quickly, so oversized requests
are refused rather than attempted.

Sensitivity: one attacker type's prior is scaled by a percentage and the
difference redistributed over the remaining types proportionally to
their priors; the normalized loss in reward (NLR) then compares the
objective a fixed assumed-model strategy earns under the perturbed truth
against the optimum for that truth.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .game import GameSpec, assemble_game, with_alpha, with_type_distribution
from .solver import (
    SolveResult,
    StrategyEvaluation,
    evaluate_strategy,
    solve_bsg,
    uniform_strategy,
    validate_strategy,
)

DEFAULT_KCV_BUDGET = 100_000
NLR_ZERO_TOL = 1e-9


class BudgetExceededError(RuntimeError):
    """k-CV refusal: the subset count exceeds the subproblem budget."""


class PerturbationError(ValueError):
    """The requested prior perturbation leaves the probability simplex."""


@dataclass(frozen=True)
class KcvResult:
    k: int
    best_sets: tuple[frozenset[str], ...]
    objective_after_removal: float
    subproblems_solved: int


@dataclass(frozen=True)
class SensitivityCell:
    type_index: int
    x_pct: float
    nlr: float | None  # None when the perturbation was infeasible (skipped)


@dataclass(frozen=True)
class SensitivityReport:
    source: str  # "bsg" or "urs"
    step_pct: float
    type_names: tuple[str, ...]
    assumed_strategy: np.ndarray
    cells: tuple[SensitivityCell, ...]
    max_nlr: float
    mean_nlr: float
    skipped: tuple[tuple[int, float], ...]

    def grid(self) -> dict[tuple[int, float], float | None]:
        return {(c.type_index, c.x_pct): c.nlr for c in self.cells}


@dataclass(frozen=True)
class AlphaPoint:
    alpha: float
    solved: SolveResult
    uniform: StrategyEvaluation


def remove_attacks(game: GameSpec, removed: set[str] | frozenset[str]) -> GameSpec:
    """Rebuild the game with the given attack ids struck from every arsenal."""
    pool = set(game.attack_pool())
    unknown = set(removed) - pool
    if unknown:
        raise ValueError(f"unknown attack ids: {sorted(unknown)}")
    kept = [a for a in game.attacks if a.cve_id not in removed]
    bare_types = [replace(t, arsenal=()) for t in game.types]
    with warnings.catch_warnings():
        # Emptied arsenals are expected mid-analysis, not a modelling smell.
        warnings.simplefilter("ignore")
        return assemble_game(
            game.catalog,
            [c.stack for c in game.configurations],
            bare_types,
            kept,
            game.switch_cost,
            game.alpha,
        )


def find_kcv(game: GameSpec, k: int, budget: int = DEFAULT_KCV_BUDGET) -> KcvResult:
    """Exhaustively evaluate every k-subset removal; report all argmax sets.

    Refuses with BudgetExceededError when C(|pool|, k) exceeds the
    budget, citing the combination count.
    """
    pool = game.attack_pool()
    if k < 1 or k > len(pool):
        raise ValueError(f"k must lie in [1, {len(pool)}], got {k}")
    n_subsets = math.comb(len(pool), k)
    if n_subsets > budget:
        raise BudgetExceededError(
            f"{len(pool)} choose {k} = {n_subsets} removal subproblems "
            f"exceeds the budget of {budget}"
        )
    best_value = -np.inf
    results: list[tuple[frozenset[str], float]] = []
    for subset in itertools.combinations(pool, k):
        objective = solve_bsg(remove_attacks(game, set(subset))).objective
        results.append((frozenset(subset), objective))
        best_value = max(best_value, objective)
    tol = max(1e-8, 1e-9 * abs(best_value))
    best_sets = tuple(s for s, v in results if v >= best_value - tol)
    return KcvResult(
        k=k,
        best_sets=best_sets,
        objective_after_removal=float(best_value),
        subproblems_solved=len(results),
    )


def perturb_probabilities(probabilities, type_index: int, x_pct: float) -> np.ndarray:
    """Scale one prior by x% and redistribute the difference to the rest.

    The perturbed type gets P_i * (1 + x/100); every other type j is
    scaled by (1 -+ p / sum_{k != i} P_k) with p = P_i * |x|/100, the
    sign opposite to the change in P_i.  Raises PerturbationError when
    the result would leave [0, 1]; results always sum to one.
    """
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or not 0 <= type_index < len(p):
        raise ValueError("type_index out of range")
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must be a distribution summing to 1")
    if not -100.0 <= x_pct <= 100.0:
        raise ValueError(f"sensitivity factor must lie in [-100, 100], got {x_pct}")
    if x_pct == 0.0:
        return p.copy()

    shifted = p[type_index] * (1.0 + x_pct / 100.0)
    if shifted > 1.0 + 1e-12:
        raise PerturbationError(
            f"perturbed probability {shifted!r} for type {type_index} exceeds 1"
        )
    transfer = p[type_index] * abs(x_pct) / 100.0
    rest = p.sum() - p[type_index]
    if rest <= 1e-15:
        if transfer > 1e-15:
            raise PerturbationError(
                "no remaining probability mass to redistribute against"
            )
        return p.copy()
    scale = 1.0 - transfer / rest if x_pct > 0 else 1.0 + transfer / rest
    if scale < -1e-12:
        raise PerturbationError(
            f"redistribution scale {scale!r} is negative for type {type_index}"
        )
    out = p * max(scale, 0.0)
    out[type_index] = shifted
    return out


def nlr(game: GameSpec, x_assumed, p_true) -> float:
    """Normalized loss in reward of an assumed-model strategy.

    R_o: full objective of x_assumed under the true type distribution
    (best responses re-derived, cost term included).  R_n: the optimal
    objective for the true distribution.  Returns (R_n - R_o)/|R_n|,
    0 for the 0/0 case, and the raw loss R_n - R_o when only the
    denominator vanishes.
    """
    x_assumed = validate_strategy(game, x_assumed)
    game_true = with_type_distribution(game, p_true)
    r_o = evaluate_strategy(game_true, x_assumed, "exact").objective
    r_n = solve_bsg(game_true).objective
    if abs(r_n) < NLR_ZERO_TOL:
        return 0.0 if abs(r_o) < NLR_ZERO_TOL else float(r_n - r_o)
    return float((r_n - r_o) / abs(r_n))


def sensitivity_sweep(
    game: GameSpec, strategy_source: str = "bsg", step_pct: float = 10.0
) -> SensitivityReport:
    """NLR of a fixed assumed-model strategy across the perturbation grid.

    The grid runs each type's prior from -100% to +100% in step_pct
    steps; infeasible perturbations are recorded as skipped.  max/mean
    aggregate the nonzero-perturbation cells (the zero column is the
    unperturbed model).
    """
    if strategy_source not in ("bsg", "urs"):
        raise ValueError(f"unknown strategy source {strategy_source!r}")
    if step_pct <= 0 or abs(100.0 / step_pct - round(100.0 / step_pct)) > 1e-9:
        raise ValueError(f"step must divide 100, got {step_pct}")
    if strategy_source == "bsg":
        x_assumed = solve_bsg(game).strategy
    else:
        x_assumed = uniform_strategy(game)

    base_p = np.array([t.probability for t in game.types])
    steps = int(round(100.0 / step_pct))
    grid = [round(i * step_pct, 9) for i in range(-steps, steps + 1)]

    cells: list[SensitivityCell] = []
    skipped: list[tuple[int, float]] = []
    nlr_cache: dict[tuple[float, ...], float | None] = {}
    for ti in range(len(game.types)):
        for x_pct in grid:
            try:
                p_new = perturb_probabilities(base_p, ti, x_pct)
            except PerturbationError:
                cells.append(SensitivityCell(ti, x_pct, None))
                skipped.append((ti, x_pct))
                continue
            key = tuple(np.round(p_new, 12))
            if key not in nlr_cache:
                nlr_cache[key] = nlr(game, x_assumed, p_new)
            cells.append(SensitivityCell(ti, x_pct, nlr_cache[key]))

    nonzero = [c.nlr for c in cells if c.x_pct != 0.0 and c.nlr is not None]
    return SensitivityReport(
        source=strategy_source,
        step_pct=step_pct,
        type_names=tuple(t.name for t in game.types),
        assumed_strategy=x_assumed,
        cells=tuple(cells),
        max_nlr=float(max(nonzero)) if nonzero else 0.0,
        mean_nlr=float(np.mean(nonzero)) if nonzero else 0.0,
        skipped=tuple(skipped),
    )


def alpha_sweep(game: GameSpec, alphas) -> list[AlphaPoint]:
    """Solve per alpha; also evaluates the uniform baseline at each alpha."""
    alphas = [float(a) for a in alphas]
    if any(a < 0 for a in alphas):
        raise ValueError("alpha values must be >= 0")
    points = []
    urs = uniform_strategy(game)
    for a in alphas:
        game_a = with_alpha(game, a)
        points.append(
            AlphaPoint(
                alpha=a,
                solved=solve_bsg(game_a),
                uniform=evaluate_strategy(game_a, urs, "exact"),
            )
        )
    return points
