"""Continuous-time simple random walks and the fast-reach statistic.

The fast-reach value of a site x is the largest rightward distance k such
that some particle from x is, at some moment t, at least k sites to the
right while t is still within the crossing budget (the prefix-sum of
reciprocal speeds over the sites crossed).  The walk is right-continuous
and piecewise constant, and the budget constraint is loosest at the left
end of each constancy interval, so it is enough to test jump epochs.

Budgets beyond a configured cap K are never consulted: a qualifying epoch
at or past K reports K with a saturation flag ("at least K").  The cap is
part of the statistic and is reported with every result.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .speed import SpeedFunction

DEFAULT_REACH_CAP = 1000
DEFAULT_TRAJ_CAP = 100_000


@dataclass(frozen=True)
class Trajectory:
    """Jump times, steps, and running positions of one walk started at 0."""

    times: np.ndarray      # strictly increasing jump epochs
    steps: np.ndarray      # +-1 per jump
    positions: np.ndarray  # positions immediately after each jump
    truncated_by: Optional[str] = None   # "max_jumps" | "max_time" | None

    def __post_init__(self):
        if self.times.size != self.steps.size:
            raise ValueError("times and steps must align")


def sample_trajectory(rng, max_jumps: Optional[int] = None,
                      max_time: Optional[float] = None) -> Trajectory:
    """Walk with unit-rate exponential interarrivals and fair +-1 steps.

    Generation stops at whichever horizon hits first; the cause is
    recorded so downstream code never mistakes truncation for death.
    """
    if max_jumps is None and max_time is None:
        raise ValueError("need max_jumps >= 1 or max_time > 0")
    if max_jumps is not None and max_jumps < 1:
        raise ValueError("max_jumps must be >= 1")
    if max_time is not None and max_time <= 0:
        raise ValueError("max_time must be positive")

    times = []
    steps = []
    t = 0.0
    truncated = None
    while True:
        if max_jumps is not None and len(times) >= max_jumps:
            truncated = "max_jumps"
            break
        t += rng.exponential()
        if max_time is not None and t > max_time:
            truncated = "max_time"
            break
        times.append(t)
        steps.append(1 if rng.integers(0, 2) else -1)
    times = np.asarray(times, dtype=float)
    steps = np.asarray(steps, dtype=np.int64)
    return Trajectory(times, steps, np.cumsum(steps), truncated)


@dataclass(frozen=True)
class ReachResult:
    value: int
    saturated: bool      # value == cap: true reach is "at least cap"
    cap: int


def _segment_table(speed: SpeedFunction, x: int, cap: int) -> np.ndarray:
    """Crossing budgets segment(x, s) for s = 0..cap."""
    if x < 0:
        raise ValueError("site must be non-negative")
    if x + cap > speed.horizon:
        raise ValueError(f"x + cap = {x + cap} exceeds speed horizon {speed.horizon}")
    return speed.prefix_arr[x:x + cap + 1] - speed.prefix_arr[x]


def fast_reach(speed: SpeedFunction, x: int, trajectories: Sequence[Trajectory],
               cap: int = DEFAULT_REACH_CAP) -> ReachResult:
    """Max qualifying rightward distance over the given particles, capped.

    An epoch with position s >= 1 qualifies when its time is within the
    budget segment(x, min(s, cap)); the empty particle list gives 0.
    """
    seg = _segment_table(speed, x, cap)
    best = 0
    for traj in trajectories:
        s_idx = np.clip(traj.positions, 0, cap)
        qual = (traj.positions >= 1) & (traj.times <= seg[s_idx])
        if np.any(qual):
            best = max(best, int(s_idx[qual].max()))
        if best >= cap:
            break
    return ReachResult(min(best, cap), best >= cap, cap)


def reach_batch(speed: SpeedFunction, x: int, counts: np.ndarray, rng,
                cap: int = DEFAULT_REACH_CAP) -> np.ndarray:
    """Fast-reach values for many independent replicas at one site.

    counts[r] particles are drawn for replica r; all trajectories run
    vectorized, each generated exactly until its time exceeds the full
    budget segment(x, cap), past which no epoch can qualify.  Returns the
    per-replica reach values (saturation is value == cap).
    """
    counts = np.asarray(counts, dtype=np.int64)
    seg = _segment_table(speed, x, cap)
    budget = seg[cap]
    out = np.zeros(counts.size, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        return out

    owner = np.repeat(np.arange(counts.size), counts)
    t = np.zeros(total)
    pos = np.zeros(total, dtype=np.int64)
    best = np.zeros(total, dtype=np.int64)
    alive = np.arange(total)

    while alive.size:
        n = alive.size
        t[alive] += rng.standard_exponential(n)
        pos[alive] += rng.integers(0, 2, size=n) * 2 - 1
        ta = t[alive]
        pa = pos[alive]
        s_idx = np.clip(pa, 0, cap)
        qual = (pa >= 1) & (ta <= seg[s_idx])
        if np.any(qual):
            idx = alive[qual]
            np.maximum.at(best, idx, s_idx[qual])
        alive = alive[ta <= budget]

    np.maximum.at(out, owner, best)
    return out


@dataclass(frozen=True)
class TailEstimate:
    """Monte Carlo estimate of P{reach > j} with its binomial stderr."""

    p: float
    stderr: float
    replicas: int
    x: int
    j: int
    cap: int
    truncated_draws: int    # replicas whose particle count hit the draw clamp

    def __iter__(self):  # allows p, se = estimate
        yield self.p
        yield self.stderr


def binomial_stderr(p_hat: float, n: int) -> float:
    """Binomial stderr with a 1/n floor so 3-sigma margins stay meaningful
    at zero observed successes."""
    return max(np.sqrt(p_hat * (1.0 - p_hat) / n), 1.0 / n)


def estimate_reach_tail(speed: SpeedFunction, x: int, j: int,
                        dist, replicas: int, rng,
                        cap: int = DEFAULT_REACH_CAP,
                        traj_cap: int = DEFAULT_TRAJ_CAP) -> TailEstimate:
    """Estimate P{fast reach at x exceeds j} over fresh particle configurations.

    Each replica draws its own particle count from the law and that many
    walks.  j at or past the cap is refused rather than silently reported
    as zero.  Counts are clamped at traj_cap (extra walks beyond the clamp
    could only raise the reach); clamped replicas are counted in the
    result.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    if j >= cap:
        raise ValueError(f"j = {j} is at or past the reach cap {cap}; "
                         "raise the cap instead of reading a saturated zero")
    counts = dist.sample(rng, size=replicas, clamp=traj_cap)
    truncated = int(np.count_nonzero(counts >= traj_cap))
    values = reach_batch(speed, x, counts, rng, cap=cap)
    p_hat = float(np.mean(values > j))
    return TailEstimate(p_hat, binomial_stderr(p_hat, replicas),
                        replicas, x, j, cap, truncated)
