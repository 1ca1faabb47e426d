"""One test per acceptance criterion; each reports a PASS/FAIL line in the terminal summary."""
from __future__ import annotations

import io
import math
import time
from contextlib import redirect_stdout
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from fedchain import analytics, cli, game, sim
from fedchain.crosschain import PENDING

from oracles import grid_best_utility


def number(n):
    def mark(fn):
        fn.criterion_number = n
        return fn
    return mark


@number(1)
def test_c1_confirmation_table(criterion):
    t0 = time.perf_counter()
    out = io.StringIO()
    with redirect_stdout(out):
        code = cli.main(["confirm-table", "--slot-seconds", "20"])
    elapsed = time.perf_counter() - t0
    rows = [line.split(",") for line in out.getvalue().strip().splitlines()[1:]]
    ratios = [r[0] for r in rows]
    minutes = [Fraction(r[3]) for r in rows]
    expected = [Fraction(x) for x in ("1", "1.3", "1.6", "1.6", "2", "2.3", "2.6", "3")]
    ok = (code == 0 and ratios == list(cli.DEFAULT_RATIOS) and minutes == expected
          and elapsed < 1.0)
    criterion(1, "confirmation table minutes 1,1.3,1.6,1.6,2,2.3,2.6,3", ok,
              f"minutes={[r[3] for r in rows]} kappa={[r[1] for r in rows]} {elapsed:.3f}s")


@number(2)
def test_c2_two_follower_equilibrium(criterion):
    t0 = time.perf_counter()
    g = game.GameInstance([100, 300], [10, 20, 30])
    closed = game.follower_equilibrium(g)
    dyn, _ = game.best_response_dynamics(g)
    u1 = game.follower_utility(g, dyn, 0)
    elapsed = time.perf_counter() - t0
    target = np.array([50 / 3, 100 / 3, 50])
    err = max(np.abs(closed[0] - target).max(), np.abs(dyn[0] - target).max())
    ok = err < 1e-6 and abs(u1 - 15) < 1e-6 and elapsed < 1.0
    criterion(2, "B=[100,300], R=[10,20,30] gives s1=[50/3,100/3,50], U1=15", ok,
              f"max|s1 err|={err:.2e} U1={u1:.9f} {elapsed:.3f}s")


@number(3)
def test_c3_common_prefix_claims(criterion):
    t0 = time.perf_counter()
    claims = analytics.pr_cp(0.51, 7) < 0.01 and analytics.pr_cp(0.51, 4) > 0.05
    worst, cells = 0.0, 0
    for i, gamma in enumerate(np.round(np.arange(0.55, 0.901, 0.05), 2)):
        for kappa in range(1, 9):
            p = analytics.pr_cp(gamma, kappa)
            est = analytics.cp_race_oracle(gamma, kappa, 100_000, seed=1000 * i + kappa)
            sigma = analytics.binomial_se(p, 100_000)
            worst = max(worst, abs(est - p) / sigma)
            cells += 1
    elapsed = time.perf_counter() - t0
    ok = claims and worst <= 3.0 and cells == 64 and elapsed < 120
    criterion(3, "pr_cp(0.51,7)<0.01, pr_cp(0.51,4)>0.05, race oracle within 3 sigma", ok,
              f"pr_cp(0.51,7)={analytics.pr_cp(0.51, 7):.5f} pr_cp(0.51,4)={analytics.pr_cp(0.51, 4):.4f} "
              f"worst z={worst:.2f} over {cells} cells {elapsed:.1f}s")


@number(4)
def test_c4_best_response_optimality(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst_gap, max_sweeps, max_err = math.inf, 0, 0.0
    for _ in range(100):
        N, M = int(rng.integers(2, 21)), int(rng.integers(2, 6))
        budgets = rng.uniform(50, 100, N)
        g = game.GameInstance(budgets, rng.uniform(1, 100, M))
        start = rng.uniform(0.01, 1.0, (N, M))
        start *= (budgets / start.sum(axis=1))[:, None]
        n = int(rng.integers(N))
        others = game.others_stake(start, n)
        br = game.best_response(g, start, n)
        u_br = float(game.chain_payoffs(g.rewards, br, others).sum())
        u_grid = grid_best_utility(g.rewards, others, budgets[n], 200)
        worst_gap = min(worst_gap, u_br - u_grid)
        profile, sweeps = game.best_response_dynamics(g, start, max_sweeps=500, tol=1e-10)
        max_sweeps = max(max_sweeps, sweeps)
        max_err = max(max_err, float(np.abs(profile - game.follower_equilibrium(g)).max()))
    elapsed = time.perf_counter() - t0
    ok = worst_gap >= -1e-9 and max_sweeps < 500 and max_err < 1e-4 and elapsed < 60
    criterion(4, "KKT best response >= 200-point grid; dynamics reach equilibrium", ok,
              f"min(U_br-U_grid)={worst_gap:.2e} sweeps<={max_sweeps} sup err={max_err:.2e} {elapsed:.1f}s")


@number(5)
def test_c5_leader_optimum(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        budgets = rng.uniform(50, 100, int(rng.integers(2, 101)))
        M = int(rng.integers(2, 6))
        r = game.leader_optimum(budgets, M)
        others = (M - 1) * r
        h = 1e-4 * r
        up = game.leader_utility_vs_reward(budgets, r + h, others)
        down = game.leader_utility_vs_reward(budgets, r - h, others)
        slope = (up - down) / (2 * h)
        # the slope is a difference of two O(1) terms: d(sum s ln s)/dR and 1
        worst = max(worst, abs(slope))
    exact = game.leader_optimum([3, 3], 3)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and abs(exact - 4 / 3) < 1e-15 and elapsed < 10
    criterion(5, "leader optimum satisfies first-order condition; B=[3,3], M=3 gives 4/3", ok,
              f"max|dU/dR|={worst:.2e} R*={exact!r} {elapsed:.2f}s")


@number(6)
def test_c6_stake_distribution(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for scheme, target in (("static", np.array([1, 2, 3]) / 6), ("dynamic", np.full(3, 1 / 3))):
        for level in ("weak", "medium", "strong"):
            cfg = sim.preset_config(level, "none", scheme)
            for em in sim.run_scenario(cfg):
                shares = np.array([c.stake_share for c in em.per_chain])
                worst = max(worst, float(np.abs(shares / target - 1).max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 0.01 and elapsed < 60
    criterion(6, "stake shares equal reward shares every epoch (static and dynamic)", ok,
              f"max relative deviation={worst:.2e} {elapsed:.1f}s")


def _metric(runs, key):
    return np.array([[getattr(c, key) for c in em.per_chain] for em in runs])


@number(7)
def test_c7_directional_security(criterion):
    t0 = time.perf_counter()
    runs = {}
    for level in ("weak", "medium", "strong"):
        for adv in ("static", "adaptive"):
            for scheme in ("static", "dynamic"):
                runs[level, adv, scheme] = sim.run_scenario(sim.preset_config(level, adv, scheme))
    failures = []
    metrics = ("pr_cp", "pr_cq_exact")
    # (a) stronger adversary, larger violation probabilities
    for adv in ("static", "adaptive"):
        for scheme in ("static", "dynamic"):
            for key in metrics:
                w, m, s = (_metric(runs[lv, adv, scheme], key) for lv in ("weak", "medium", "strong"))
                if not (np.all(w < m) and np.all(m < s)):
                    failures.append(f"(a) {adv}/{scheme}/{key}")
    # (b) static adversary: non-increasing in total system stake
    for level in ("weak", "medium", "strong"):
        for scheme in ("static", "dynamic"):
            run = runs[level, "static", scheme]
            order = np.argsort([em.total_system_stake for em in run], kind="stable")
            for key in metrics:
                vals = _metric(run, key)[order]
                if np.any(np.diff(vals, axis=0) > 1e-12 * np.abs(vals[:-1]) + 1e-300):
                    failures.append(f"(b) {level}/{scheme}/{key}")
    # (c) dynamic chains no worse than the static scheme's weakest chain
    for level in ("weak", "medium", "strong"):
        for adv in ("static", "adaptive"):
            for key in metrics:
                dyn = _metric(runs[level, adv, "dynamic"], key).max(axis=1)
                worst_static = _metric(runs[level, adv, "static"], key).max(axis=1)
                if np.any(dyn > worst_static * (1 + 1e-9)):
                    failures.append(f"(c) {level}/{adv}/{key}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 120
    criterion(7, "security metrics ordered by adversary strength, stake and reward scheme", ok,
              f"{'violations: ' + ', '.join(failures) if failures else 'all orderings hold'} {elapsed:.1f}s")


@number(8)
def test_c8_empty_block_attack(criterion):
    t0 = time.perf_counter()
    fraction = sim.empty_block_attack(None, 0.3, 10_000, seed=8)
    theta = analytics.throughput_threshold(0.3, 100)
    # independent check of the threshold with scipy: P[X > 45] < 1e-3 <= P[X > 44]
    sf = stats.binom(100, 0.3).sf
    oracle_ok = sf(45) < 1e-3 <= sf(44)
    elapsed = time.perf_counter() - t0
    ok = abs(fraction - 0.30) <= 0.02 and theta == 0.45 and oracle_ok and elapsed < 30
    criterion(8, "empty-block attack at ratio 0.3 empties 0.30+-0.02 of blocks; threshold 0.45", ok,
              f"measured={fraction:.4f} theta={theta} P[X>45]={sf(45):.2e} P[X>44]={sf(44):.2e} "
              f"{elapsed:.1f}s")


@number(9)
def test_c9_cross_chain_safety(criterion):
    t0 = time.perf_counter()
    from test_crosschain import run_transfer_properties
    props = run_transfer_properties()
    forced = sim.scripted_double_spend([True, True, True])
    blocked = sim.scripted_double_spend([True, True, False, True], kappa=4)
    trials = sim.double_spend_trials(0.7, 3, 100_000, seed=9)
    p = analytics.pr_cp(0.7, 3)
    sigma = analytics.binomial_se(p, trials.trials)
    elapsed = time.perf_counter() - t0
    ok = (props and forced.succeeded and not blocked.succeeded and trials.mismatches == 0
          and abs(trials.rate - p) <= 3 * sigma and elapsed < 120)
    criterion(9, "conservation, no double mint, PENDING below depth; double spend only after "
                 "kappa adversarial slots", ok,
              f"rate={trials.rate:.5f} vs pr_cp={p:.5f} (3 sigma={3 * sigma:.5f}) "
              f"mismatches={trials.mismatches} {elapsed:.1f}s")


@number(10)
def test_c10_determinism(criterion, tmp_path, monkeypatch):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)
    cfg = sim.preset_config("strong", "adaptive", "dynamic", rng_seed=2 ** 200 + 7)
    a = sim.metrics_csv(sim.run_scenario(cfg)).encode()
    b = sim.metrics_csv(sim.run_scenario(sim.ScenarioConfig.from_dict(cfg.to_dict()))).encode()
    m1 = cli.run_one(cfg, "inline", str(tmp_path / "one"))
    m2 = cli.run_one(cfg, "inline", str(tmp_path / "two"))
    same_files = all((tmp_path / "one" / f).read_bytes() == (tmp_path / "two" / f).read_bytes()
                     for f in ("config.json", "metrics.csv", "summary.txt"))
    ok = a == b and m1.files == m2.files and same_files
    criterion(10, "same config and seed give byte-identical metrics.csv", ok,
              f"metrics.csv git digest {m1.files['metrics.csv'][:12]}")
