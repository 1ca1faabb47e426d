"""Command-line entry point: ``fedchain confirm-table | equilibrium | simulate``."""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import analytics, game, sim
from .errors import ConfigError, DomainError, FedChainError

log = logging.getLogger("fedchain")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
DEFAULT_RATIOS = ("0.10", "0.15", "0.20", "0.25", "0.30", "0.35", "0.40", "0.45")
SEED_ENV = "FEDCHAIN_SEED"


# -- confirm-table ---------------------------------------------------------------

@dataclass(frozen=True)
class ConfirmRow:
    ratio: str
    kappa: int
    seconds: float
    minutes: float


def confirm_table(ratios: Sequence[str] = DEFAULT_RATIOS, slot_seconds: str = "20") -> list[ConfirmRow]:
    rows = []
    for text in ratios:
        r = Fraction(text)
        if r >= Fraction(1, 2):
            raise DomainError(f"ratio {text}: the beacon and consensus guarantees need more "
                              "than 51% honest stake, so the adversarial ratio must stay below 0.5")
        if r <= 0:
            raise DomainError(f"ratio {text} must be positive")
        kappa, seconds = analytics.confirmation_time(r, Fraction(slot_seconds))
        rows.append(ConfirmRow(text, kappa, seconds, analytics.minutes_one_decimal(Fraction(seconds))))
    return rows


def cmd_confirm_table(args) -> int:
    ratios = [t.strip() for t in args.ratios.split(",")] if args.ratios else DEFAULT_RATIOS
    try:
        rows = confirm_table(ratios, args.slot_seconds)
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise ConfigError(f"bad ratio list: {exc}") from exc
    print("ratio,kappa,seconds,minutes")
    for row in rows:
        print(f"{row.ratio},{row.kappa},{row.seconds:g},{row.minutes:.1f}")
    return EXIT_OK


# -- equilibrium -----------------------------------------------------------------

@dataclass
class EquilibriumConfig:
    budgets: list[float]
    rewards: Optional[list[float]] = None
    reward_scheme: str = "static"
    M: Optional[int] = None

    def __post_init__(self):
        if not self.budgets:
            raise ConfigError("budgets must be a non-empty list")
        if self.reward_scheme == "static":
            if not self.rewards:
                raise ConfigError("static scheme needs a rewards list")
            self.M = len(self.rewards)
        elif self.reward_scheme == "dynamic":
            if self.M is None:
                self.M = len(self.rewards) if self.rewards else None
            if not self.M:
                raise ConfigError("dynamic scheme needs M (number of chains)")
        else:
            raise ConfigError(f"unknown reward_scheme {self.reward_scheme!r}")


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def load_equilibrium_config(path: str) -> EquilibriumConfig:
    data = load_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    known = {f.name for f in dataclasses.fields(EquilibriumConfig)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"{path}: unknown fields {', '.join(extra)}")
    try:
        return EquilibriumConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def equilibrium_report(cfg: EquilibriumConfig) -> str:
    budgets = np.asarray(cfg.budgets, dtype=float)
    lines = []
    if cfg.reward_scheme == "dynamic":
        r_star = game.leader_optimum(budgets, cfg.M)
        rewards = np.full(cfg.M, r_star)
        lines.append(f"leader optimal reward R* = {r_star:.6f} per chain")
    else:
        rewards = np.asarray(cfg.rewards, dtype=float)
    g = game.GameInstance(budgets, rewards)
    s = game.follower_equilibrium(g)
    lines.append("follower allocations (rows: followers, columns: chains)")
    for n in range(g.N):
        lines.append(f"  s{n + 1} = [" + ", ".join(f"{x:.2f}" for x in s[n]) + "]")
    lines.append("follower utilities")
    for n in range(g.N):
        lines.append(f"  U{n + 1} = {game.follower_utility(g, s, n):.6f}")
    deviation = max(float(np.abs(game.best_response(g, s, n) - s[n]).max()) for n in range(g.N))
    lines.append(f"largest best-response deviation: {deviation:.3g}")
    lines.append("chain stake shares = [" + ", ".join(f"{x:.6f}" for x in game.stake_shares(s)) + "]")
    if g.N >= 2:
        verdict = "negative definite (unique equilibrium)" if game.rosen_check(g, s) else "NOT negative definite"
        lines.append(f"G + G^T at the equilibrium: {verdict}")
    else:
        lines.append("G + G^T check skipped: needs at least two followers")
    return "\n".join(lines)


def cmd_equilibrium(args) -> int:
    print(equilibrium_report(load_equilibrium_config(args.config)))
    return EXIT_OK


# -- simulate --------------------------------------------------------------------

@dataclass
class RunManifest:
    scenario: str
    config_path: str
    output_dir: str
    config_digest: str
    rng_seed: str
    started: str
    finished: str
    files: dict[str, str]


def git_blob_digest(data: bytes) -> str:
    """Same digest ``git hash-object`` gives the file."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def load_scenarios(path: str) -> list[sim.ScenarioConfig]:
    """A config file holds one scenario object or ``{"scenarios": [...]}``."""
    data = load_json(path)
    if isinstance(data, dict) and "scenarios" in data:
        items = data["scenarios"]
    else:
        items = [data]
    if not isinstance(items, list) or not all(isinstance(x, dict) for x in items):
        raise ConfigError(f"{path}: expected a scenario object or a list of them")
    seed = os.environ.get(SEED_ENV)
    configs = []
    for item in items:
        item = dict(item)
        if seed:
            try:
                item["rng_seed"] = int(seed, 0)
            except ValueError as exc:
                raise ConfigError(f"{SEED_ENV}={seed!r} is not an integer") from exc
        configs.append(sim.ScenarioConfig.from_dict(item))
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: scenario names must be unique")
    return configs


def summarize(cfg: sim.ScenarioConfig, metrics: Sequence[sim.EpochMetrics]) -> str:
    lines = [f"scenario {cfg.name}: N={cfg.N} M={cfg.M} epochs={cfg.n_e} rewards={cfg.reward_scheme} "
             f"adversary={cfg.adversary} seed={cfg.rng_seed}"]
    for m in range(cfg.M):
        rows = [em.per_chain[m] for em in metrics]
        ratios = [c.adversarial_ratio for c in rows]
        lines.append(
            f"chain {m + 1}: stake share {rows[-1].stake_share:.4f}, adversarial ratio "
            f"{min(ratios):.4f}..{max(ratios):.4f}, max Pr_CP {max(c.pr_cp for c in rows):.6g}, "
            f"max Pr_CQ(exact) {max(c.pr_cq_exact for c in rows):.6g}, "
            f"broken epochs {sum(c.broken for c in rows)}, halted epochs {sum(c.halted for c in rows)}")
    broken = sum(c.broken for em in metrics for c in em.per_chain)
    if broken:
        lines.append(f"BROKEN: {broken} chain-epochs with adversarial ratio >= 0.5")
    return "\n".join(lines) + "\n"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_one(cfg: sim.ScenarioConfig, config_path: str, out_dir: str) -> RunManifest:
    """Run one scenario end to end and write its artifacts into ``out_dir``."""
    started = _now()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_bytes = (json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n").encode()
    metrics = sim.run_scenario(cfg)
    artifacts = {
        "config.json": config_bytes,
        "metrics.csv": sim.metrics_csv(metrics).encode("utf-8"),
        "summary.txt": summarize(cfg, metrics).encode("utf-8"),
    }
    for name, data in artifacts.items():
        (out / name).write_bytes(data)
    manifest = RunManifest(cfg.name, str(config_path), str(out), git_blob_digest(config_bytes),
                           str(cfg.rng_seed), started, _now(),
                           {name: git_blob_digest(data) for name, data in artifacts.items()})
    (out / "manifest.json").write_text(json.dumps(dataclasses.asdict(manifest), indent=2) + "\n",
                                       encoding="utf-8")
    return manifest


def cmd_simulate(args) -> int:
    configs = load_scenarios(args.config)
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    base = Path(args.out)
    dirs = [str(base if len(configs) == 1 else base / c.name) for c in configs]
    if args.workers == 1 or len(configs) == 1:
        manifests = [run_one(c, args.config, d) for c, d in zip(configs, dirs)]
    else:
        with ProcessPoolExecutor(max_workers=min(args.workers, len(configs))) as pool:
            manifests = list(pool.map(run_one, configs, [args.config] * len(configs), dirs))
    for m in manifests:
        print(f"{m.scenario}: wrote {m.output_dir} (metrics.csv {m.files['metrics.csv'][:12]})")
    return EXIT_OK


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fedchain", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ct = sub.add_parser("confirm-table", help="confirmation depth and time per adversarial ratio")
    ct.add_argument("--ratios", help="comma-separated adversarial ratios (default: 0.10..0.45)")
    ct.add_argument("--slot-seconds", default="20", help="slot duration in seconds (default 20)")
    ct.set_defaults(func=cmd_confirm_table)

    eq = sub.add_parser("equilibrium", help="solve the reward game for a budget/reward config")
    eq.add_argument("--config", required=True)
    eq.set_defaults(func=cmd_equilibrium)

    sm = sub.add_parser("simulate", help="run scenario config(s) and write metrics")
    sm.add_argument("--config", required=True)
    sm.add_argument("--out", required=True, help="output directory")
    sm.add_argument("--workers", type=int, default=1, help="parallel scenarios (default 1)")
    sm.set_defaults(func=cmd_simulate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FedChainError, OSError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
