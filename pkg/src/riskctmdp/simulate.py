"""Monte Carlo estimation of the exponential-utility criterion.

Trajectories of the jump process under a stationary policy are simulated
jump by jump: the sojourn in state x is exponential with the policy
action's total rate (sampled by inverse CDF for portability), and the jump
lands in y with probability rate(x,a,y)/total.  A state with zero total
rate absorbs; if its cost rate is positive the accumulated cost there is
infinite.  Trajectories that hit the jump budget are truncated and
accounted for explicitly: the estimate reports the truncated fraction and
a guaranteed lower bound rather than silently biased numbers.

Randomness is counter-based: trajectory i draws from a Philox stream
positioned at counter block i, derived only from (master_seed, i), so
estimates are independent of execution order and worker count, and
extending the jump budget replays the same draws as a prefix.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .extreal import INF, ExtReal
from .model import CtmdpModel, StationaryPolicy, validate_policy
from .reduction import DtmdpModel

DEFAULT_MAX_JUMPS = 64

ABSORBED = "absorbed"
TRUNCATED = "truncated"

_SEED_MASK = (1 << 64) - 1
_TINY = 5e-324  # guards the holding-time > 0 invariant at the u == 0 event


def trajectory_stream(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for trajectory `index`: Philox counter block index."""
    return np.random.Generator(
        np.random.Philox(key=int(master_seed) & _SEED_MASK,
                         counter=int(index) << 192))


@dataclass(frozen=True)
class Trajectory:
    """One simulated path: recorded jumps, how it ended, and its cost.

    jumps holds (state, action, holding_time) per completed jump; the
    infinite sojourn of an absorbed path is not a recorded jump, but it
    contributes an infinite accumulated cost when the absorbing state's
    cost rate is positive.
    """

    jumps: tuple
    terminal: str  # ABSORBED or TRUNCATED
    accumulated_cost: ExtReal
    elapsed_time: float
    final_state: int


@dataclass(frozen=True)
class McEstimate:
    """Empirical mean of e^{cost} with uncertainty and truncation accounting.

    std_error is None when some sample is infinite or the sample tail
    fails the sanity check (max sample <= half the sample sum); it is 0
    when all samples coincide.  lower_bound_mean averages e^{finite part
    of the cost}, an underestimate whenever paths were truncated or
    absorbed at positive cost.
    """

    mean: ExtReal
    std_error: float | None
    n_trajectories: int
    truncated_fraction: float
    lower_bound_mean: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.to_json_value(),
            "std_error": self.std_error,
            "n": self.n_trajectories,
            "truncated_fraction": float(self.truncated_fraction),
            "lower_bound_mean": float(self.lower_bound_mean),
            "seed": self.seed,
        }


class _JumpTables:
    """Per-state jump data for one (model, policy)."""

    def __init__(self, model: CtmdpModel, policy: StationaryPolicy):
        n = model.n_states
        self.totals = np.empty(n)
        self.cost_rates = np.empty(n)
        self.actions = list(policy.choice)
        self.targets = []
        self.cums = []
        for x, a in enumerate(policy.choice):
            row = model.rates[x, a]
            positive = np.flatnonzero(row > 0)
            self.totals[x] = model.total_rates[x, a]
            self.cost_rates[x] = model.costs[x, a]
            self.targets.append(positive)
            self.cums.append(np.cumsum(row[positive]))

    def walk(self, x0: int, draws, max_jumps: int, jumps=None):
        """One path; jump k consumes draws 2k (sojourn) and 2k+1 (target).

        Returns (finite cost, elapsed time, terminal, final state); an
        absorbed final state with positive cost rate means the true
        accumulated cost is infinite beyond the returned finite part.
        """
        x = x0
        cost = 0.0
        elapsed = 0.0
        for k in range(max_jumps):
            total = self.totals[x]
            if total == 0.0:
                return cost, elapsed, ABSORBED, x
            theta = -math.log1p(-draws[2 * k]) / total
            if theta <= 0.0:
                theta = _TINY
            cost += self.cost_rates[x] * theta
            elapsed += theta
            cum = self.cums[x]
            idx = int(np.searchsorted(cum, draws[2 * k + 1] * total,
                                      side="right"))
            if idx >= len(cum):  # cumsum roundoff at the top edge
                idx = len(cum) - 1
            if jumps is not None:
                jumps.append((x, self.actions[x], theta))
            x = int(self.targets[x][idx])
        terminal = ABSORBED if self.totals[x] == 0.0 else TRUNCATED
        return cost, elapsed, terminal, x


def sample_trajectory(model: CtmdpModel, policy: StationaryPolicy, x0: int,
                      rng_stream: np.random.Generator,
                      max_jumps: int = DEFAULT_MAX_JUMPS) -> Trajectory:
    """Simulate until absorption (zero total rate) or the jump budget.

    Deterministic given the stream; a longer budget replays the same draw
    prefix, so recorded jumps only ever extend.
    """
    if max_jumps < 1:
        raise ValueError(f"max_jumps must be at least 1, got {max_jumps}")
    validate_policy(model, policy)
    if not 0 <= x0 < model.n_states:
        raise ValueError(f"start state index {x0} out of range")
    tables = _JumpTables(model, policy)
    draws = rng_stream.random(2 * max_jumps)
    jumps = []
    cost, elapsed, terminal, final = tables.walk(x0, draws, max_jumps, jumps)
    if terminal == ABSORBED and tables.cost_rates[final] > 0.0:
        accumulated = ExtReal(INF)
    else:
        accumulated = ExtReal(cost)
    return Trajectory(jumps=tuple(jumps), terminal=terminal,
                      accumulated_cost=accumulated, elapsed_time=elapsed,
                      final_state=final)


class _ChainTables:
    """Per-state step data for one (discrete-time model, policy)."""

    def __init__(self, dtmdp: DtmdpModel, choice):
        n = dtmdp.n_states
        self.targets = []
        self.cums = []
        self.step_costs = []
        self.terminal = np.zeros(n, dtype=bool)
        for x in range(n):
            a = choice[x]
            row = dtmdp.kernel[x, a]
            positive = np.flatnonzero(row > 0)
            self.targets.append(positive)
            self.cums.append(np.cumsum(row[positive]))
            self.step_costs.append(dtmdp.log_cost[x, a][positive])
            self.terminal[x] = (bool(np.all(positive == x))
                                and dtmdp.log_cost[x, a, x] == 0.0)

    def walk(self, x0: int, draws, max_steps: int):
        """One chain path; step k consumes draw k.  Returns (cost, steps,
        terminal, final state)."""
        x = x0
        cost = 0.0
        for k in range(max_steps):
            if self.terminal[x]:
                return cost, k, ABSORBED, x
            cum = self.cums[x]
            idx = int(np.searchsorted(cum, draws[k] * cum[-1], side="right"))
            if idx >= len(cum):
                idx = len(cum) - 1
            cost += self.step_costs[x][idx]
            x = int(self.targets[x][idx])
        terminal = ABSORBED if self.terminal[x] else TRUNCATED
        return cost, max_steps, terminal, x


def _summarize(costs, infinite, truncated, master_seed: int) -> McEstimate:
    n = len(costs)
    lb_samples = np.exp(costs)
    lower = float(np.mean(lb_samples))
    samples = np.where(infinite, np.inf, lb_samples)
    if np.isinf(samples).any():
        mean = ExtReal(INF)
    else:
        mean = ExtReal(float(np.mean(samples)))
    if np.isinf(samples).any():
        std_error = None
    elif samples.max() == samples.min():
        std_error = 0.0
    elif samples.max() <= 0.5 * samples.sum():
        std_error = float(samples.std(ddof=1) / math.sqrt(n))
    else:
        std_error = None  # heavy tail: a CI would be meaningless
    return McEstimate(mean=mean, std_error=std_error, n_trajectories=n,
                      truncated_fraction=float(np.mean(truncated)),
                      lower_bound_mean=lower,
                      seed=int(master_seed) & _SEED_MASK)


def _run_indexed(fill, n: int, n_workers: int):
    """Run fill(start, stop) over [0, n) split into contiguous chunks.

    Workers write disjoint index ranges of preallocated arrays; results
    are identical for any worker count because each trajectory's stream
    depends only on its index.
    """
    if n_workers <= 1:
        fill(0, n)
        return
    chunk = (n + n_workers - 1) // n_workers
    ranges = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        for future in [pool.submit(fill, s, e) for s, e in ranges]:
            future.result()


def _reset_to_block(bit_gen, index: int):
    state = bit_gen.state
    state["state"]["counter"][:] = 0
    state["state"]["counter"][3] = index  # counter = index << 192
    state["buffer_pos"] = 4
    state["has_uint32"] = 0
    state["uinteger"] = 0
    bit_gen.state = state


def estimate_value_mc(model: CtmdpModel, policy: StationaryPolicy, x0: int,
                      n: int, master_seed: int,
                      max_jumps: int = DEFAULT_MAX_JUMPS,
                      n_workers: int = 1) -> McEstimate:
    """Estimate E[e^{total cost}] from x0 by simulating n trajectories."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if max_jumps < 1:
        raise ValueError(f"max_jumps must be at least 1, got {max_jumps}")
    validate_policy(model, policy)
    if not 0 <= x0 < model.n_states:
        raise ValueError(f"start state index {x0} out of range")
    tables = _JumpTables(model, policy)
    key = int(master_seed) & _SEED_MASK
    costs = np.empty(n)
    infinite = np.zeros(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)

    def fill(start: int, stop: int):
        bit_gen = np.random.Philox(key=key)
        gen = np.random.Generator(bit_gen)
        for i in range(start, stop):
            _reset_to_block(bit_gen, i)
            draws = gen.random(2 * max_jumps)
            cost, _, terminal, final = tables.walk(x0, draws, max_jumps)
            costs[i] = cost
            truncated[i] = terminal == TRUNCATED
            infinite[i] = (terminal == ABSORBED
                           and tables.cost_rates[final] > 0.0)

    _run_indexed(fill, n, n_workers)
    return _summarize(costs, infinite, truncated, master_seed)


def estimate_dtmdp_value_mc(dtmdp: DtmdpModel, policy: StationaryPolicy,
                            x0: int, n: int, master_seed: int,
                            max_steps: int = DEFAULT_MAX_JUMPS,
                            n_workers: int = 1) -> McEstimate:
    """Estimate the chain's multiplicative cost from x0; a step is terminal
    when its row is the identity at zero step cost."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if max_steps < 1:
        raise ValueError(f"max_steps must be at least 1, got {max_steps}")
    choice = dtmdp.check_policy(policy)
    if not 0 <= x0 < dtmdp.n_states:
        raise ValueError(f"start state index {x0} out of range")
    tables = _ChainTables(dtmdp, choice)
    key = int(master_seed) & _SEED_MASK
    costs = np.empty(n)
    infinite = np.zeros(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)

    def fill(start: int, stop: int):
        bit_gen = np.random.Philox(key=key)
        gen = np.random.Generator(bit_gen)
        for i in range(start, stop):
            _reset_to_block(bit_gen, i)
            draws = gen.random(max_steps)
            cost, _, terminal, _ = tables.walk(x0, draws, max_steps)
            costs[i] = cost
            truncated[i] = terminal == TRUNCATED

    _run_indexed(fill, n, n_workers)
    return _summarize(costs, infinite, truncated, master_seed)
