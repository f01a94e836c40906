"""Reduction of a continuous-time model to an equivalent discrete-time one.

Each state receives a weight w(x) = 1 + max_cost_rate(x) + max_total_rate(x).
Dividing the rate kernel by w and returning the leftover mass to the state
itself yields a proper stochastic kernel, and charging ln(w/(w - c)) per
step makes the exponential-utility value of the embedded chain coincide
with the value of the original jump process.  States, actions and
admissible sets are preserved, so policies transfer verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CtmdpModel, ModelError

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DtmdpModel:
    """Discrete-time model with per-step kernel and multiplicative cost.

    kernel[x, a] is a probability vector over successor states;
    log_cost[x, a, y] >= 0 is the log of the per-step cost factor.  The
    reduction produces log_cost constant in y, but the general slot is
    kept so hand-built instances need no special casing.
    """

    states: tuple
    actions: tuple
    admissible: tuple
    kernel: np.ndarray  # (n_states, n_actions, n_states)
    log_cost: np.ndarray  # (n_states, n_actions, n_states)

    def __post_init__(self):
        adm_mask = np.zeros((self.n_states, self.n_actions), dtype=bool)
        for x, acts in enumerate(self.admissible):
            adm_mask[x, list(acts)] = True
        object.__setattr__(self, "_admissible_mask", adm_mask)
        self.kernel.setflags(write=False)
        self.log_cost.setflags(write=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def admissible_mask(self) -> np.ndarray:
        return self._admissible_mask

    def state_index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise ModelError(f"unknown state '{name}'") from None

    def check_policy(self, policy) -> np.ndarray:
        """Validate a stationary policy against this model's admissible
        sets; returns the choice as an index array."""
        if len(policy.choice) != self.n_states:
            raise ModelError(
                f"policy covers {len(policy.choice)} states, model has "
                f"{self.n_states}")
        for x, a in enumerate(policy.choice):
            if a not in self.admissible[x]:
                raise ModelError(
                    f"policy action '{self.actions[a]}' is not admissible "
                    f"at state '{self.states[x]}'")
        return np.asarray(policy.choice, dtype=int)

    def to_dict(self) -> dict:
        kernel = []
        for x in range(self.n_states):
            for a in range(self.n_actions):
                for y in range(self.n_states):
                    prob = self.kernel[x, a, y]
                    if prob > 0.0:
                        kernel.append({"from": self.states[x],
                                       "action": self.actions[a],
                                       "to": self.states[y],
                                       "prob": float(prob)})
        log_cost = []
        for x in range(self.n_states):
            for a in range(self.n_actions):
                row = self.log_cost[x, a]
                if np.all(row == row[0]):
                    if row[0] > 0.0:
                        log_cost.append({"state": self.states[x],
                                         "action": self.actions[a],
                                         "value": float(row[0])})
                else:
                    for y in range(self.n_states):
                        if row[y] > 0.0:
                            log_cost.append({"state": self.states[x],
                                             "action": self.actions[a],
                                             "to": self.states[y],
                                             "value": float(row[y])})
        return {
            "states": list(self.states),
            "actions": list(self.actions),
            "admissible": {self.states[x]: [self.actions[a] for a in acts]
                           for x, acts in enumerate(self.admissible)},
            "kernel": kernel,
            "log_cost": log_cost,
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, DtmdpModel):
            return NotImplemented
        return (self.states == other.states
                and self.actions == other.actions
                and self.admissible == other.admissible
                and np.array_equal(self.kernel, other.kernel)
                and np.array_equal(self.log_cost, other.log_cost))


def make_dtmdp(states, actions, kernel, log_cost, admissible=None) -> DtmdpModel:
    """Validate and build a discrete-time model from arrays.

    Kernel rows of admissible state-action pairs must be probability
    vectors (nonnegative, summing to 1 within 1e-12); log-cost entries
    must be finite and nonnegative.
    """
    states = tuple(states)
    actions = tuple(actions)
    n, m = len(states), len(actions)
    kernel = np.asarray(kernel, dtype=float)
    log_cost = np.asarray(log_cost, dtype=float)
    if log_cost.shape == (n, m):  # constant-in-successor costs
        log_cost = np.repeat(log_cost[:, :, None], n, axis=2)
    if kernel.shape != (n, m, n) or log_cost.shape != (n, m, n):
        raise ModelError("kernel/log_cost shapes do not match state/action sets")
    if admissible is None:
        admissible = tuple(tuple(range(m)) for _ in range(n))
    else:
        admissible = tuple(tuple(sorted(set(acts))) for acts in admissible)
        for x, acts in enumerate(admissible):
            if not acts or acts[0] < 0 or acts[-1] >= m:
                raise ModelError(f"bad admissible set for state '{states[x]}'")

    if np.any(kernel < 0):
        x, a, y = (int(i) for i in np.argwhere(kernel < 0)[0])
        raise ModelError(
            f"negative kernel entry at ('{states[x]}', '{actions[a]}', "
            f"'{states[y]}'): {kernel[x, a, y]}")
    bad = ~np.isfinite(log_cost) | (log_cost < 0)
    if np.any(bad):
        x, a, y = (int(i) for i in np.argwhere(bad)[0])
        raise ModelError(
            f"invalid log-cost at ('{states[x]}', '{actions[a]}', "
            f"'{states[y]}'): {log_cost[x, a, y]}")
    sums = kernel.sum(axis=2)
    for x, acts in enumerate(admissible):
        for a in acts:
            if abs(sums[x, a] - 1.0) > ROW_SUM_TOL:
                raise ModelError(
                    f"kernel row at ('{states[x]}', '{actions[a]}') sums to "
                    f"{sums[x, a]!r}, not 1")
    return DtmdpModel(states=states, actions=actions, admissible=admissible,
                      kernel=kernel, log_cost=log_cost)


def uniformization_weight(model: CtmdpModel) -> np.ndarray:
    """Per-state weight 1 + max cost rate + max total rate.

    This is the smallest admissible choice; it minimizes the self-loop
    mass of the embedded chain.  It guarantees w(x) >= 1 and
    w(x) - c(x, a) >= 1 + max_total_rate(x) > 0 for every admissible a.
    """
    return 1.0 + model.max_cost_rate + model.max_total_rate


def build_equivalent_dtmdp(model: CtmdpModel) -> DtmdpModel:
    """Embed the jump process into a discrete-time model with equal value.

    kernel(x,a)[y] = rates(x,a,y)/w(x) for y != x, with the leftover mass
    1 - total_rate(x,a)/w(x) kept at x; log_cost(x,a,.) =
    ln(w(x)/(w(x) - c(x,a))).  Inadmissible pairs get an identity row at
    zero cost so that every row stays stochastic.
    """
    n, m = model.n_states, model.n_actions
    w = uniformization_weight(model)
    adm = model.admissible_mask
    kernel = model.rates / w[:, None, None]
    idx = np.arange(n)
    kernel[idx, :, idx] = 1.0 - model.total_rates / w[:, None]
    # w - c > 0 is only guaranteed for admissible pairs; inadmissible rows
    # become identity rows at zero cost so every row stays stochastic
    denom = np.where(adm, w[:, None] - model.costs, 1.0)
    log_cost = np.log(np.where(adm, w[:, None], 1.0) / denom)
    for x in range(n):
        for a in range(m):
            if not adm[x, a]:
                kernel[x, a, :] = 0.0
                kernel[x, a, x] = 1.0
    return make_dtmdp(model.states, model.actions, kernel, log_cost,
                      model.admissible)
