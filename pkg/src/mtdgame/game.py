"""Bayesian Stackelberg game assembly for a switching web stack.

The defender owns an n-layer technology stack and mixes over valid
configurations; attacker types are named adversaries with per-technology
expertise and a prior probability.  An attack enters a type's arsenal
when the attack touches a technology the type knows and its
exploitability subscore does not exceed the type's expertise for that
technology (expertise caps the exploitability of attacks the type can
field; see the cvss module note on score semantics).  Rewards come from
CVSS: a successful attack pays the attacker the base score and costs the
defender the impact score; everything else, including the NO-OP action,
is worth zero.  Honey-net / detection bonuses are reserved fields and
never populated here.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .nvd import AttackRecord

NO_OP = "NO-OP"

SWITCH_COST_MIN = 0.0
SWITCH_COST_MAX = 10.0

PROBABILITY_SUM_TOL = 1e-9


class GameValidationError(ValueError):
    """Raised when a game definition violates a model invariant."""


@dataclass(frozen=True)
class TechnologyCatalog:
    """Ordered stack layers, each offering a set of technologies."""

    layers: tuple[str, ...]
    technologies: tuple[frozenset[str], ...]

    def __post_init__(self):
        if len(self.layers) != len(self.technologies):
            raise GameValidationError("one technology set required per layer")
        if len(set(self.layers)) != len(self.layers):
            raise GameValidationError("layer names must be unique")
        seen: set[str] = set()
        for techs in self.technologies:
            if seen & techs:
                raise GameValidationError(
                    f"technology names must be globally unique: {sorted(seen & techs)}"
                )
            seen |= techs

    def all_technologies(self) -> frozenset[str]:
        return frozenset().union(*self.technologies) if self.technologies else frozenset()


@dataclass(frozen=True)
class Configuration:
    """One valid stack: a technology per layer, with a positional id."""

    id: int
    stack: tuple[str, ...]


@dataclass(frozen=True)
class AttackerType:
    """Named adversary: per-technology expertise, prior, derived arsenal."""

    name: str
    expertise: dict[str, float]
    probability: float
    arsenal: tuple[str, ...] = ()

    def __post_init__(self):
        for tech, level in self.expertise.items():
            if not 0.0 <= level <= 10.0:
                raise GameValidationError(
                    f"expertise for {tech!r} must lie in [0, 10], got {level}"
                )
        if not 0.0 <= self.probability <= 1.0:
            raise GameValidationError(
                f"type probability must lie in [0, 1], got {self.probability}"
            )


@dataclass(frozen=True)
class RewardModel:
    """Per-type reward matrices, one row per arsenal action.

    attacker[t][a, c] is the attacker payoff of action a against
    configuration c; defender[t][a, c] the defender payoff.  NO-OP rows
    are identically zero.  detection_bonus_* are reserved and unused.
    """

    attacker: tuple[np.ndarray, ...]
    defender: tuple[np.ndarray, ...]
    detection_bonus_attacker: None = None
    detection_bonus_defender: None = None


@dataclass(frozen=True)
class GameSpec:
    catalog: TechnologyCatalog
    configurations: tuple[Configuration, ...]
    types: tuple[AttackerType, ...]
    attacks: tuple["AttackRecord", ...]
    rewards: RewardModel
    switch_cost: np.ndarray
    alpha: float
    big_m: float

    @property
    def n_configs(self) -> int:
        return len(self.configurations)

    def attack_pool(self) -> tuple[str, ...]:
        """All attack ids used by at least one type (NO-OP excluded)."""
        pool = {a for t in self.types for a in t.arsenal if a != NO_OP}
        return tuple(sorted(pool))

    def attack_by_id(self, cve_id: str) -> "AttackRecord":
        for attack in self.attacks:
            if attack.cve_id == cve_id:
                return attack
        raise KeyError(cve_id)


def in_arsenal(attacker_type: AttackerType, attack: "AttackRecord") -> bool:
    """True when some shared technology carries enough expertise.

    Membership requires a technology the type knows among the attack's
    affected technologies, at expertise >= the attack's exploitability
    subscore.
    """
    es = attack.scores.exploitability
    return any(
        tech in attacker_type.expertise and es <= attacker_type.expertise[tech]
        for tech in attack.affected_technologies
    )


def attack_affects(attack: "AttackRecord", config: Configuration) -> bool:
    """True when the attack touches any technology in the configuration."""
    return bool(attack.affected_technologies & set(config.stack))


def build_rewards(
    types: Sequence[AttackerType],
    attacks_by_id: dict[str, "AttackRecord"],
    configs: Sequence[Configuration],
) -> RewardModel:
    """Reward matrices from arsenals: (base, -impact) on hits, else zero."""
    attacker_rows = []
    defender_rows = []
    for t in types:
        ra = np.zeros((len(t.arsenal), len(configs)))
        rd = np.zeros_like(ra)
        for ai, action in enumerate(t.arsenal):
            if action == NO_OP:
                continue
            attack = attacks_by_id[action]
            for ci, config in enumerate(configs):
                if attack_affects(attack, config):
                    ra[ai, ci] = attack.scores.base
                    rd[ai, ci] = -attack.scores.impact
        ra.setflags(write=False)
        rd.setflags(write=False)
        attacker_rows.append(ra)
        defender_rows.append(rd)
    return RewardModel(attacker=tuple(attacker_rows), defender=tuple(defender_rows))


def assemble_game(
    catalog: TechnologyCatalog,
    config_stacks: Sequence[Sequence[str]],
    types: Sequence[AttackerType],
    attacks: Sequence["AttackRecord"],
    switch_cost,
    alpha: float,
) -> GameSpec:
    """Validate inputs, derive arsenals and rewards, compute big-M."""
    if not config_stacks:
        raise GameValidationError("at least one configuration is required")
    configurations = []
    seen_stacks: set[tuple[str, ...]] = set()
    for idx, stack in enumerate(config_stacks):
        stack = tuple(stack)
        if len(stack) != len(catalog.layers):
            raise GameValidationError(
                f"configuration {stack} must pick one technology per layer"
            )
        for k, tech in enumerate(stack):
            if tech not in catalog.technologies[k]:
                raise GameValidationError(
                    f"{tech!r} is not a technology of layer {catalog.layers[k]!r}"
                )
        if stack in seen_stacks:
            raise GameValidationError(f"duplicate configuration {stack}")
        seen_stacks.add(stack)
        configurations.append(Configuration(id=idx, stack=stack))

    if not types:
        raise GameValidationError("at least one attacker type is required")
    names = [t.name for t in types]
    if len(set(names)) != len(names):
        raise GameValidationError("attacker type names must be unique")
    total = sum(t.probability for t in types)
    if abs(total - 1.0) > PROBABILITY_SUM_TOL:
        raise GameValidationError(
            f"type probabilities must sum to 1 (got {total!r})"
        )

    k_matrix = np.array(switch_cost, dtype=float)
    n = len(configurations)
    if k_matrix.shape != (n, n):
        raise GameValidationError(
            f"switch cost matrix must be {n}x{n}, got {k_matrix.shape}"
        )
    if np.any(np.diagonal(k_matrix) != 0.0):
        raise GameValidationError("switch cost diagonal must be zero (no-op switch)")
    if np.any(k_matrix < SWITCH_COST_MIN) or np.any(k_matrix > SWITCH_COST_MAX):
        raise GameValidationError(
            f"switch cost entries must lie in [{SWITCH_COST_MIN:g}, {SWITCH_COST_MAX:g}]"
        )
    k_matrix.setflags(write=False)

    if not alpha >= 0.0:
        raise GameValidationError(f"alpha must be >= 0, got {alpha}")

    ids = [a.cve_id for a in attacks]
    if len(set(ids)) != len(ids):
        raise GameValidationError("attack ids must be unique")
    attacks_by_id = {a.cve_id: a for a in attacks}

    armed_types = []
    for t in types:
        arsenal = tuple(
            sorted(a.cve_id for a in attacks if in_arsenal(t, a))
        ) + (NO_OP,)
        if len(arsenal) == 1:
            warnings.warn(
                f"attacker type {t.name!r} has an empty arsenal beyond {NO_OP}",
                stacklevel=2,
            )
        armed_types.append(replace(t, arsenal=arsenal))

    rewards = build_rewards(armed_types, attacks_by_id, configurations)
    row_sums = [np.abs(ra).sum(axis=1).max() if ra.size else 0.0 for ra in rewards.attacker]
    big_m = 10.0 + max(row_sums, default=0.0)

    return GameSpec(
        catalog=catalog,
        configurations=tuple(configurations),
        types=tuple(armed_types),
        attacks=tuple(attacks),
        rewards=rewards,
        switch_cost=k_matrix,
        alpha=float(alpha),
        big_m=big_m,
    )


def with_type_distribution(game: GameSpec, probabilities: Sequence[float]) -> GameSpec:
    """Same game under a different type prior (arsenals/rewards unchanged)."""
    if len(probabilities) != len(game.types):
        raise GameValidationError("one probability per attacker type required")
    total = sum(probabilities)
    if abs(total - 1.0) > PROBABILITY_SUM_TOL:
        raise GameValidationError(f"type probabilities must sum to 1 (got {total!r})")
    new_types = tuple(
        replace(t, probability=float(p)) for t, p in zip(game.types, probabilities)
    )
    return replace(game, types=new_types)


def with_alpha(game: GameSpec, alpha: float) -> GameSpec:
    if not alpha >= 0.0:
        raise GameValidationError(f"alpha must be >= 0, got {alpha}")
    return replace(game, alpha=float(alpha))


def with_switch_cost(game: GameSpec, switch_cost) -> GameSpec:
    """Same game with a replacement cost matrix (revalidated)."""
    k_matrix = np.array(switch_cost, dtype=float)
    n = game.n_configs
    if k_matrix.shape != (n, n):
        raise GameValidationError(
            f"switch cost matrix must be {n}x{n}, got {k_matrix.shape}"
        )
    if np.any(np.diagonal(k_matrix) != 0.0):
        raise GameValidationError("switch cost diagonal must be zero (no-op switch)")
    if np.any(k_matrix < SWITCH_COST_MIN) or np.any(k_matrix > SWITCH_COST_MAX):
        raise GameValidationError(
            f"switch cost entries must lie in [{SWITCH_COST_MIN:g}, {SWITCH_COST_MAX:g}]"
        )
    k_matrix.setflags(write=False)
    return replace(game, switch_cost=k_matrix)


@dataclass(frozen=True)
class GameDefinition:
    """Parsed game definition file: everything but the CVE feed."""

    catalog: TechnologyCatalog
    config_stacks: tuple[tuple[str, ...], ...]
    types: tuple[AttackerType, ...]
    switch_cost: np.ndarray
    alpha: float
    date_from: date
    date_to: date


def load_game_file(path: str | Path) -> GameDefinition:
    """Read a JSON game definition (layers, configurations, types, costs)."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise GameValidationError(f"cannot read game file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise GameValidationError(f"game file {path} is not valid JSON: {exc}") from exc

    try:
        layers = tuple(layer["name"] for layer in doc["layers"])
        technologies = tuple(
            frozenset(layer["technologies"]) for layer in doc["layers"]
        )
        catalog = TechnologyCatalog(layers=layers, technologies=technologies)
        config_stacks = tuple(tuple(stack) for stack in doc["configurations"])
        types = tuple(
            AttackerType(
                name=t["name"],
                expertise={k: float(v) for k, v in t["expertise"].items()},
                probability=float(t["probability"]),
            )
            for t in doc["attacker_types"]
        )
        switch_cost = np.array(doc["switch_cost"], dtype=float)
        alpha = float(doc.get("alpha", 0.0))
        date_range = doc.get("date_range", {})
        date_from = date.fromisoformat(date_range["from"])
        date_to = date.fromisoformat(date_range["to"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GameValidationError(f"bad game file {path}: {exc}") from exc

    if date_from > date_to:
        raise GameValidationError(
            f"bad game file {path}: date range {date_from} > {date_to}"
        )
    return GameDefinition(
        catalog=catalog,
        config_stacks=config_stacks,
        types=types,
        switch_cost=switch_cost,
        alpha=alpha,
        date_from=date_from,
        date_to=date_to,
    )


def assemble_from_definition(
    definition: GameDefinition, attacks: Iterable["AttackRecord"]
) -> GameSpec:
    return assemble_game(
        definition.catalog,
        definition.config_stacks,
        definition.types,
        list(attacks),
        definition.switch_cost,
        definition.alpha,
    )
