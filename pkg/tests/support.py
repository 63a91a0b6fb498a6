"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import random
from pathlib import Path

import numpy as np

from mtdgame import (
    AttackerType,
    AttackRecord,
    TechnologyCatalog,
    assemble_from_definition,
    assemble_game,
    build_attack_catalog,
    load_feed,
    load_game_file,
    parse_vector,
    score_vector,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"

GAME_FILE = FIXTURES / "game.json"
FEED_FILE = FIXTURES / "nvd_feed.json"
KCV_GAME_FILE = FIXTURES / "kcv_game.json"
KCV_FEED_FILE = FIXTURES / "kcv_feed.json"


def load_fixture_game(game_file=GAME_FILE, feed_file=FEED_FILE):
    definition = load_game_file(game_file)
    feed = load_feed(feed_file)
    catalog = build_attack_catalog(
        feed.records, definition.catalog, definition.date_from, definition.date_to
    )
    return assemble_from_definition(definition, catalog.attacks)


def make_attack(cve_id: str, vector_text: str, technologies) -> AttackRecord:
    vector = parse_vector(vector_text)
    return AttackRecord(
        cve_id=cve_id,
        vector=vector,
        scores=score_vector(vector),
        affected_technologies=frozenset(technologies),
    )


# Vector pool spanning low/medium/high exploitability and impact.
VECTOR_POOL = [
    "AV:L/AC:L/Au:N/C:P/I:N/A:N",
    "AV:L/AC:L/Au:N/C:P/I:P/A:P",
    "AV:L/AC:M/Au:N/C:P/I:N/A:N",
    "AV:N/AC:L/Au:N/C:P/I:P/A:P",
    "AV:N/AC:L/Au:N/C:C/I:C/A:C",
    "AV:N/AC:L/Au:S/C:C/I:C/A:C",
    "AV:N/AC:M/Au:S/C:P/I:P/A:P",
    "AV:N/AC:L/Au:S/C:P/I:N/A:N",
    "AV:N/AC:H/Au:N/C:C/I:C/A:C",
    "AV:N/AC:M/Au:N/C:P/I:P/A:P",
    "AV:A/AC:L/Au:N/C:C/I:C/A:C",
    "AV:N/AC:M/Au:N/C:N/I:P/A:N",
]


def random_small_game(rng: random.Random):
    """A random small game: |C| in 2..4, 2-3 types, 2-4 arsenal attacks each.

    Rejection-sampled so every type's arsenal (beyond NO-OP) has 2-4
    attacks, matching the acceptance-battery shape.
    """
    while True:
        n_configs = rng.choice([2, 3, 4])
        n_layers = rng.choice([1, 2])
        if n_layers == 1:
            techs = [f"tech{i}" for i in range(n_configs)]
            catalog = TechnologyCatalog(("layer0",), (frozenset(techs),))
            stacks = [(t,) for t in techs]
        else:
            left = ["alpha", "bravo"]
            right = ["charlie", "delta"]
            catalog = TechnologyCatalog(
                ("layer0", "layer1"), (frozenset(left), frozenset(right))
            )
            all_stacks = [(a, b) for a in left for b in right]
            rng.shuffle(all_stacks)
            stacks = sorted(all_stacks[:n_configs])
        all_techs = sorted(catalog.all_technologies())

        n_attacks = rng.randint(3, 7)
        attacks = []
        for i in range(n_attacks):
            n_aff = rng.randint(1, min(2, len(all_techs)))
            affected = rng.sample(all_techs, n_aff)
            attacks.append(
                make_attack(
                    f"CVE-2015-{1000 + i}", rng.choice(VECTOR_POOL), affected
                )
            )

        n_types = rng.randint(2, 3)
        raw = [rng.uniform(0.1, 1.0) for _ in range(n_types)]
        total = sum(raw)
        types = []
        for ti in range(n_types):
            n_exp = rng.randint(1, len(all_techs))
            expertise = {
                tech: rng.choice([4.0, 5.0, 6.0, 8.0, 10.0])
                for tech in rng.sample(all_techs, n_exp)
            }
            types.append(
                AttackerType(
                    name=f"type{ti}",
                    expertise=expertise,
                    probability=raw[ti] / total,
                )
            )

        k = np.zeros((n_configs, n_configs))
        for i in range(n_configs):
            for j in range(n_configs):
                if i != j:
                    k[i, j] = round(rng.uniform(0.0, 10.0), 3)

        game = assemble_game(catalog, stacks, types, attacks, k, 0.0)
        sizes = [len(t.arsenal) - 1 for t in game.types]
        if all(2 <= s <= 4 for s in sizes):
            return game
