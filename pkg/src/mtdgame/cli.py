"""Command-line front end.

Commands load a game definition plus one or more CVE feeds (or
previously ingested catalog files), assemble the game, and run the
solver and analyses.  All outputs are deterministic: there is no
randomness anywhere in the pipeline, so identical inputs produce
bit-identical files.

Exit codes: 0 success, 2 validation/input error, 3 budget refusal.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .analysis import (
    BudgetExceededError,
    PerturbationError,
    alpha_sweep,
    find_kcv,
    sensitivity_sweep,
)
from .cvss import CvssParseError
from .game import (
    GameDefinition,
    GameSpec,
    GameValidationError,
    assemble_from_definition,
    load_game_file,
    with_alpha,
)
from .lp import LpError
from .nvd import (
    AttackRecord,
    FeedError,
    IngestStats,
    build_attack_catalog,
    is_catalog_file,
    load_catalog_file,
    load_feed,
    save_catalog_file,
)
from .solver import evaluate_strategy, solve_bsg, uniform_strategy


@dataclass(frozen=True)
class RunManifest:
    """Resolved inputs of one CLI invocation; paths are checked up front."""

    command: str
    game_file: Path
    feed_files: tuple[Path, ...]
    out_dir: Path
    alphas: tuple[float, ...] | None
    date_from: date | None
    date_to: date | None
    deterministic: bool = True

    def validate_paths(self) -> None:
        for path in (self.game_file, *self.feed_files):
            if not path.exists():
                raise FileNotFoundError(f"input file does not exist: {path}")


@dataclass
class LoadedInputs:
    definition: GameDefinition
    game: GameSpec
    attacks: list[AttackRecord]
    stats: IngestStats
    malformed_items: int


def _parse_alpha_range(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"--alpha-range must be lo:hi:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"bad --alpha-range {text!r}: need lo <= hi and step > 0")
    count = int((hi - lo) / step + 1e-9)
    return tuple(round(lo + i * step, 10) for i in range(count + 1))


def _column_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")


def _config_columns(game: GameSpec) -> list[str]:
    return ["_".join(_column_name(t) for t in c.stack) for c in game.configurations]


def _write_dat(path: Path, header: list[str], rows) -> None:
    lines = [" ".join(header)]
    for row in rows:
        lines.append(" ".join(f"{v:.6g}" for v in row))
    path.write_text("\n".join(lines) + "\n")


def _load_inputs(manifest: RunManifest) -> LoadedInputs:
    definition = load_game_file(manifest.game_file)
    date_from = manifest.date_from or definition.date_from
    date_to = manifest.date_to or definition.date_to

    raw_records = []
    resolved: list[AttackRecord] = []
    malformed = 0
    for path in manifest.feed_files:
        if is_catalog_file(path):
            resolved.extend(load_catalog_file(path))
        else:
            result = load_feed(path)
            raw_records.extend(result.records)
            malformed += result.malformed_items

    known = definition.catalog.all_technologies()
    for attack in resolved:
        stray = attack.affected_technologies - known
        if stray:
            raise GameValidationError(
                f"catalog entry {attack.cve_id} names technologies outside "
                f"the game catalog: {sorted(stray)}"
            )

    stats = IngestStats()
    built = build_attack_catalog(
        raw_records, definition.catalog, date_from, date_to, stats
    )
    merged: dict[str, AttackRecord] = {}
    for attack in resolved + built.attacks:
        if attack.cve_id in merged:
            stats.duplicate_id += 1
        else:
            merged[attack.cve_id] = attack
    attacks = sorted(merged.values(), key=lambda a: a.cve_id)
    game = assemble_from_definition(definition, attacks)
    return LoadedInputs(
        definition=definition,
        game=game,
        attacks=attacks,
        stats=stats,
        malformed_items=malformed,
    )


def _apply_alpha(game: GameSpec, alphas) -> GameSpec:
    if alphas:
        return with_alpha(game, alphas[0])
    return game


def _strategy_json(game: GameSpec, result, urs_eval) -> dict:
    columns = _config_columns(game)
    return {
        "alpha": game.alpha,
        "bsg": {
            "strategy": dict(zip(columns, result.strategy.tolist())),
            "defender_reward_term": result.defender_reward_term,
            "mccormick_cost_term": result.mccormick_cost_term,
            "exact_cost_term": result.exact_cost_term,
            "objective": result.objective,
            "responses": {
                r.type_name: {"action": r.action_id, "value": r.value}
                for r in result.responses
            },
        },
        "urs": {
            "strategy": dict(zip(columns, urs_eval.strategy.tolist())),
            "defender_reward_term": urs_eval.defender_term,
            "exact_cost_term": urs_eval.cost_term,
            "objective": urs_eval.objective,
            "responses": {
                r.type_name: {"action": r.action_id, "value": r.value}
                for r in urs_eval.responses
            },
        },
    }


def cmd_ingest(args, manifest: RunManifest) -> int:
    inputs = _load_inputs(manifest)
    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    save_catalog_file(inputs.attacks, out / "catalog.json")

    stats = inputs.stats
    print(f"attack catalog: {len(inputs.attacks)} attacks")
    print(
        "dropped: "
        f"out_of_range={stats.out_of_range} "
        f"missing_vector={stats.missing_vector} "
        f"invalid_vector={stats.invalid_vector} "
        f"no_technology_match={stats.no_technology_match} "
        f"duplicate_id={stats.duplicate_id} "
        f"malformed_items={inputs.malformed_items}"
    )
    print("arsenal sizes (excluding NO-OP):")
    empty = []
    for t in inputs.game.types:
        size = len(t.arsenal) - 1
        print(f"  {t.name}: {size}")
        if size == 0:
            empty.append(t.name)
    for name in empty:
        print(f"warning: {name} can only play NO-OP in this date range")
    print(f"wrote {out / 'catalog.json'}")
    return 0


def cmd_solve(args, manifest: RunManifest) -> int:
    inputs = _load_inputs(manifest)
    game = _apply_alpha(inputs.game, manifest.alphas)
    result = solve_bsg(game)
    urs_eval = evaluate_strategy(game, uniform_strategy(game), "exact")

    columns = _config_columns(game)
    print(f"alpha = {game.alpha:.6g}")
    print("configurations: " + " ".join(columns))
    print("BSG strategy: " + " ".join(f"{v:.6g}" for v in result.strategy))
    print("URS strategy: " + " ".join(f"{v:.6g}" for v in urs_eval.strategy))
    print(
        f"BSG: objective={result.objective:.6g} "
        f"defender_reward={result.defender_reward_term:.6g} "
        f"cost_term={result.mccormick_cost_term:.6g} "
        f"exact_cost={result.exact_cost_term:.6g}"
    )
    print(
        f"URS: objective={urs_eval.objective:.6g} "
        f"defender_reward={urs_eval.defender_term:.6g} "
        f"exact_cost={urs_eval.cost_term:.6g}"
    )
    print("best responses (BSG): " + ", ".join(
        f"{r.type_name}={r.action_id}" for r in result.responses
    ))
    print("best responses (URS): " + ", ".join(
        f"{r.type_name}={r.action_id}" for r in urs_eval.responses
    ))

    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    payload = _strategy_json(game, result, urs_eval)
    (out / "strategy.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {out / 'strategy.json'}")
    return 0


def cmd_sweep_alpha(args, manifest: RunManifest) -> int:
    inputs = _load_inputs(manifest)
    alphas = manifest.alphas or _parse_alpha_range("0:1:0.1")
    points = alpha_sweep(inputs.game, alphas)

    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_dat(
        out / "obj.dat",
        ["Alpha", "BSG", "URS"],
        [(p.alpha, p.solved.objective, p.uniform.objective) for p in points],
    )
    _write_dat(
        out / "stra.dat",
        ["Alpha"] + _config_columns(inputs.game),
        [(p.alpha, *p.solved.strategy) for p in points],
    )
    print(f"swept {len(points)} alpha values over [{alphas[0]:g}, {alphas[-1]:g}]")
    print(f"wrote {out / 'obj.dat'}")
    print(f"wrote {out / 'stra.dat'}")
    return 0


def cmd_kcv(args, manifest: RunManifest) -> int:
    inputs = _load_inputs(manifest)
    game = _apply_alpha(inputs.game, manifest.alphas)
    started = time.perf_counter()
    result = find_kcv(game, args.k, budget=args.budget)
    elapsed = time.perf_counter() - started

    best_sets = sorted(sorted(s) for s in result.best_sets)
    print(f"k = {result.k}")
    for s in best_sets:
        print("critical set: " + ", ".join(s))
    print(f"objective after removal: {result.objective_after_removal:.6g}")
    print(f"subproblems solved: {result.subproblems_solved}")
    print(f"wall time: {elapsed:.2f}s")

    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "alpha": game.alpha,
        "k": result.k,
        "best_sets": best_sets,
        "objective_after_removal": result.objective_after_removal,
        "subproblems_solved": result.subproblems_solved,
    }
    (out / "kcv.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'kcv.json'}")
    return 0


def cmd_sensitivity(args, manifest: RunManifest) -> int:
    inputs = _load_inputs(manifest)
    game = _apply_alpha(inputs.game, manifest.alphas)
    sources = [args.strategy_source] if args.strategy_source else ["bsg", "urs"]

    out = manifest.out_dir
    out.mkdir(parents=True, exist_ok=True)
    type_columns = [_column_name(t.name) for t in game.types]
    for source in sources:
        report = sensitivity_sweep(game, source, step_pct=args.step)
        grid = report.grid()
        steps = int(round(100.0 / args.step))
        variations = [round(i * args.step, 9) for i in range(-steps, steps + 1)]
        rows = []
        for x_pct in variations:
            values = [grid[(ti, x_pct)] for ti in range(len(game.types))]
            if any(v is None for v in values):
                print(f"{source}: skipped row at {x_pct:g}% (infeasible perturbation)")
                continue
            rows.append((x_pct, *values))
        path = out / f"sensitivity_{source}.dat"
        _write_dat(path, ["Variations"] + type_columns, rows)
        print(
            f"{source.upper()}: max NLR = {report.max_nlr:.6g}, "
            f"mean NLR = {report.mean_nlr:.6g} "
            f"over {sum(1 for c in report.cells if c.x_pct != 0 and c.nlr is not None)} "
            "nonzero perturbations"
        )
        print(f"wrote {path}")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "solve": cmd_solve,
    "sweep-alpha": cmd_sweep_alpha,
    "kcv": cmd_kcv,
    "sensitivity": cmd_sensitivity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtdgame",
        description="Cost-aware switching strategies for moving target defense",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, alpha: bool = True) -> None:
        p.add_argument("--game", required=True, help="game definition JSON file")
        p.add_argument(
            "--feed",
            action="append",
            required=True,
            help="NVD JSON feed or previously ingested catalog (repeatable)",
        )
        p.add_argument("--from", dest="date_from", type=date.fromisoformat)
        p.add_argument("--to", dest="date_to", type=date.fromisoformat)
        p.add_argument("--out", default="out", help="output directory")
        if alpha:
            p.add_argument("--alpha", type=float, default=None)

    add_common(sub.add_parser("ingest", help="build and report the attack catalog"),
               alpha=False)
    add_common(sub.add_parser("solve", help="solve for the optimal strategy"))
    sweep = sub.add_parser("sweep-alpha", help="solve across a range of alphas")
    add_common(sweep, alpha=False)
    sweep.add_argument("--alpha-range", default="0:1:0.1", help="lo:hi:step")
    kcv = sub.add_parser("kcv", help="find the k most critical vulnerabilities")
    add_common(kcv)
    kcv.add_argument("--k", type=int, required=True)
    kcv.add_argument("--budget", type=int, default=100_000)
    sens = sub.add_parser("sensitivity", help="attacker-type sensitivity sweep")
    add_common(sens)
    sens.add_argument("--strategy-source", choices=["bsg", "urs"], default=None)
    sens.add_argument("--step", type=float, default=10.0)
    return parser


def _manifest_from_args(args) -> RunManifest:
    if getattr(args, "alpha", None) is not None:
        alphas: tuple[float, ...] | None = (args.alpha,)
    elif getattr(args, "alpha_range", None) is not None:
        alphas = _parse_alpha_range(args.alpha_range)
    else:
        alphas = None
    manifest = RunManifest(
        command=args.command,
        game_file=Path(args.game),
        feed_files=tuple(Path(p) for p in args.feed),
        out_dir=Path(args.out),
        alphas=alphas,
        date_from=args.date_from,
        date_to=args.date_to,
    )
    manifest.validate_paths()
    return manifest


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        manifest = _manifest_from_args(args)
        return COMMANDS[args.command](args, manifest)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (
        GameValidationError,
        FeedError,
        CvssParseError,
        PerturbationError,
        LpError,
        FileNotFoundError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
