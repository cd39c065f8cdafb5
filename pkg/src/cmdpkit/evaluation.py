"""Exact evaluation of the long-run average objective and constraints.

For a stationary policy on a finite model the Cesaro limit of the running
averages exists almost surely and equals the gain of the recurrent class
the chain is absorbed into. Evaluation therefore reduces to per-class
stationary averages mixed by absorption probabilities; that reduction is
exercised as a testable identity rather than assumed silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from cmdpkit import chains
from cmdpkit.model import Mdp, Policy, Trajectory, induced_chain

Matrix = chains.Matrix


@dataclass(frozen=True)
class ClassGain:
    """Stationary averages of reward and constraint over one recurrent class."""

    states: tuple[str, ...]
    reward_gain: Fraction
    constraint_gain: tuple[Fraction, ...]


@dataclass(frozen=True)
class EvaluationReport:
    """V and W at a start state, with the per-class gains behind them.

    Identity: V = sum over classes of absorption * reward_gain, and the
    same componentwise for W.
    """

    V: Fraction
    W: tuple[Fraction, ...]
    class_gains: tuple[ClassGain, ...]
    absorption: tuple[Fraction, ...]


def class_gain(matrix: Matrix, cls: tuple[int, ...], values: Sequence[Fraction]) -> Fraction:
    """Stationary average of a per-state value over a recurrent class."""
    stationary = chains.stationary_distribution(matrix, cls)
    return sum(
        (p * values[s] for p, s in zip(stationary, cls)), Fraction(0)
    )


def class_gain_vector(
    matrix: Matrix, cls: tuple[int, ...], values: Sequence[Sequence[Fraction]]
) -> tuple[Fraction, ...]:
    """Componentwise stationary average of per-state vectors over a class."""
    stationary = chains.stationary_distribution(matrix, cls)
    width = len(values[cls[0]]) if cls else 0
    out = [Fraction(0)] * width
    for p, s in zip(stationary, cls):
        for k in range(width):
            out[k] += p * values[s][k]
    return tuple(out)


@lru_cache(maxsize=2048)
def _policy_analysis(
    mdp: Mdp, policy: Policy
) -> tuple[Matrix, tuple[ClassGain, ...], chains.AbsorptionMap]:
    chain = induced_chain(mdp, policy)
    decomposition = chains.decompose(chain)
    rewards = []
    constraint_rows = []
    for i, state in enumerate(mdp.states):
        j = mdp.actions[i].index(policy.action_for(state))
        rewards.append(mdp.rewards[i][j])
        constraint_rows.append(mdp.constraints[i][j])
    gains = tuple(
        ClassGain(
            states=tuple(mdp.states[s] for s in cls),
            reward_gain=class_gain(chain, cls, rewards),
            constraint_gain=class_gain_vector(chain, cls, constraint_rows),
        )
        for cls in decomposition.recurrent_classes
    )
    return chain, gains, chains.absorption_map(chain)


def evaluate(mdp: Mdp, policy: Policy, x: str) -> EvaluationReport:
    """Exact V and W of a policy from start state x."""
    _, gains, absorption = _policy_analysis(mdp, policy)
    row = absorption.row(mdp.state_index(x))
    v = sum((p * g.reward_gain for p, g in zip(row, gains)), Fraction(0))
    w = [Fraction(0)] * mdp.constraint_dim
    for p, g in zip(row, gains):
        for k in range(mdp.constraint_dim):
            w[k] += p * g.constraint_gain[k]
    return EvaluationReport(V=v, W=tuple(w), class_gains=gains, absorption=row)


def finite_horizon_averages(
    mdp: Mdp, policy: Policy, trajectory: Trajectory
) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Time averages (V_T, W_T) of reward and constraint along a realized path."""
    if trajectory.horizon <= 0 or not trajectory.states:
        raise ValueError("trajectory horizon must be positive")
    total_r = Fraction(0)
    total_c = [Fraction(0)] * mdp.constraint_dim
    for state in trajectory.states:
        i = mdp.state_index(state)
        j = mdp.actions[i].index(policy.action_for(state))
        total_r += mdp.rewards[i][j]
        for k in range(mdp.constraint_dim):
            total_c[k] += mdp.constraints[i][j][k]
    horizon = Fraction(len(trajectory.states))
    return total_r / horizon, tuple(c / horizon for c in total_c)
