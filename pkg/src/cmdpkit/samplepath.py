"""Sample-path constraint semantics, per-subchain conversion, simulation.

A sample-path constraint must hold almost surely along trajectories. On a
finite chain the Cesaro limit of the running constraint average equals the
gain of the absorbing recurrent class, so a policy is sample-path feasible
exactly when every reachable class has nonnegative constraint gain.

For models whose recurrent-class structure is the same under every policy
(trans-policy decomposable), sample-path constraints convert to equivalent
expected constraints, one block per subchain; constraints are meaningfully
imposable only on classes whose absorption probability the decision maker
can influence, and the selective conversion keeps exactly those.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass, replace
from fractions import Fraction

from cmdpkit import chains
from cmdpkit.evaluation import _policy_analysis
from cmdpkit.model import Mdp, Policy, Trajectory, induced_chain, validate_policy
from cmdpkit.solver import enumerate_policies

ZERO = Fraction(0)


class NotDecomposableError(ValueError):
    """The recurrent-class structure varies across policies."""


@dataclass(frozen=True)
class SamplePathVerdict:
    """Feasibility with probability one, with a failing class as witness."""

    feasible: bool
    witness_class: tuple[str, ...] | None
    witness_gain: tuple[Fraction, ...] | None


def samplepath_feasible(mdp: Mdp, policy: Policy, x: str) -> SamplePathVerdict:
    """Whether the running constraint average is almost surely nonnegative.

    Infeasible iff some recurrent class reachable from x under the policy
    has a constraint-gain component below zero; the first such class (in
    model order) is returned as witness.
    """
    validate_policy(mdp, policy)
    _, gains, absorption = _policy_analysis(mdp, policy)
    row = absorption.row(mdp.state_index(x))
    for prob, gain in zip(row, gains):
        if prob > 0 and any(g < 0 for g in gain.constraint_gain):
            return SamplePathVerdict(
                feasible=False,
                witness_class=gain.states,
                witness_gain=gain.constraint_gain,
            )
    return SamplePathVerdict(feasible=True, witness_class=None, witness_gain=None)


def trans_policy_decomposition(mdp: Mdp) -> chains.ChainDecomposition:
    """Shared class structure, or NotDecomposableError naming offenders.

    The union support graph over all actions must have the same closed-class
    partition (and the same transient set) as every single-policy chain.
    """
    union_adjacency = []
    for i in range(mdp.num_states):
        targets: set[int] = set()
        for row in mdp.kernel[i]:
            targets.update(j for j, p in enumerate(row) if p > 0)
        union_adjacency.append(tuple(sorted(targets)))
    union = chains.closed_classes(tuple(union_adjacency))

    expected = set(union.recurrent_classes)
    for policy in enumerate_policies(mdp):
        got = chains.decompose(induced_chain(mdp, policy))
        if set(got.recurrent_classes) != expected:
            differing = sorted(
                set().union(*(set(expected) ^ set(got.recurrent_classes)))
            )
            offenders = [mdp.states[s] for s in differing]
            raise NotDecomposableError(
                "recurrent-class structure varies with the policy; "
                f"offending states: {offenders}"
            )
    return union


def _converted_constraints(
    mdp: Mdp, classes: tuple[tuple[int, ...], ...]
) -> tuple[tuple[tuple[Fraction, ...], ...], ...]:
    class_of = {}
    for c, cls in enumerate(classes):
        for s in cls:
            class_of[s] = c
    n = mdp.constraint_dim
    out = []
    for i in range(mdp.num_states):
        per_action = []
        for cvec in mdp.constraints[i]:
            vec = [ZERO] * (n * len(classes))
            c = class_of.get(i)
            if c is not None:
                for j in range(n):
                    vec[c * n + j] = cvec[j]
            per_action.append(tuple(vec))
        out.append(tuple(per_action))
    return tuple(out)


def convert_to_expected(mdp: Mdp, x: str) -> Mdp:
    """Equivalent expected-constraint model with one block per subchain.

    Component (i, j) of the new constraint at (s, a) is c_j(s, a) when s
    belongs to class i and zero otherwise (so zero at transient states).
    Kernel, rewards and hence all objective values are unchanged.
    """
    mdp.state_index(x)
    classes = trans_policy_decomposition(mdp).recurrent_classes
    return replace(
        mdp,
        constraints=_converted_constraints(mdp, classes),
        constraint_dim=mdp.constraint_dim * len(classes),
    )


@dataclass(frozen=True)
class ClassControl:
    states: tuple[str, ...]
    min_prob: Fraction
    max_prob: Fraction

    @property
    def controllable(self) -> bool:
        return self.min_prob != self.max_prob


@dataclass(frozen=True)
class ClassControllability:
    """Absorption-probability range of each subchain across all policies."""

    classes: tuple[ClassControl, ...]


def controllable_classes(mdp: Mdp, x: str) -> ClassControllability:
    """Min and max absorption probability from x per class, over all policies.

    A class is controllable when the range is nondegenerate, i.e. some
    decision influences whether the process enters it.
    """
    start = mdp.state_index(x)
    classes = trans_policy_decomposition(mdp).recurrent_classes
    lo: list[Fraction | None] = [None] * len(classes)
    hi: list[Fraction | None] = [None] * len(classes)
    for policy in enumerate_policies(mdp):
        row = chains.absorption_probabilities(induced_chain(mdp, policy), start)
        for c, p in enumerate(row):
            if lo[c] is None or p < lo[c]:
                lo[c] = p
            if hi[c] is None or p > hi[c]:
                hi[c] = p
    return ClassControllability(classes=tuple(
        ClassControl(
            states=tuple(mdp.states[s] for s in cls),
            min_prob=lo[c],
            max_prob=hi[c],
        )
        for c, cls in enumerate(classes)
    ))


def selective_convert(mdp: Mdp, x: str) -> Mdp:
    """Per-subchain conversion restricted to controllable classes.

    With no controllable class the result is unconstrained (dimension 0).
    """
    classes = trans_policy_decomposition(mdp).recurrent_classes
    control = controllable_classes(mdp, x)
    kept = tuple(
        cls for cls, ctl in zip(classes, control.classes) if ctl.controllable
    )
    return replace(
        mdp,
        constraints=_converted_constraints(mdp, kept),
        constraint_dim=mdp.constraint_dim * len(kept),
    )


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True)
class SimulationReport:
    """Empirical averages and frequencies with their analytic counterparts.

    Frequencies are exact rationals count/steps; the analytic comparison
    gives the stationary distribution and gains of the class the run was
    absorbed into, plus the absorption probabilities from the start state.
    """

    seed: int
    steps: int
    start: str
    visit_counts: tuple[int, ...]
    visit_frequency: tuple[Fraction, ...]
    empirical_V: Fraction
    empirical_W: tuple[Fraction, ...]
    absorbed_class: tuple[str, ...] | None
    absorbed_stationary: tuple[Fraction, ...] | None
    absorbed_reward_gain: Fraction | None
    absorbed_constraint_gain: tuple[Fraction, ...] | None
    analytic_absorption: tuple[Fraction, ...]


_SCALE_BITS = 64
_SCALE = 1 << _SCALE_BITS


def simulate(
    mdp: Mdp, policy: Policy, x: str, steps: int, seed: int
) -> tuple[Trajectory, SimulationReport]:
    """Seeded random walk of the policy-induced chain, X_0 .. X_{steps-1}.

    Randomness contract: the generator is Python's Mersenne Twister
    (``random.Random(seed)``); each stochastic transition consumes exactly
    one 64-bit draw and picks the successor by comparing the draw against
    floor(cumulative * 2**64) thresholds (quantization below 2**-64);
    deterministic transitions consume no randomness. Identical seeds
    therefore reproduce identical trajectories on every platform.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    validate_policy(mdp, policy)
    chain = induced_chain(mdp, policy)

    samplers: list[tuple[tuple[int, ...], list[int]]] = []
    for row in chain:
        targets = tuple(j for j, p in enumerate(row) if p > 0)
        cumulative = ZERO
        thresholds = []
        for j in targets:
            cumulative += row[j]
            thresholds.append((cumulative.numerator * _SCALE) // cumulative.denominator)
        samplers.append((targets, thresholds))

    rng = random.Random(seed)
    state = mdp.state_index(x)
    counts = [0] * mdp.num_states
    path = []
    for _ in range(steps):
        path.append(state)
        counts[state] += 1
        targets, thresholds = samplers[state]
        if len(targets) == 1:
            state = targets[0]
        else:
            state = targets[bisect_right(thresholds, rng.getrandbits(_SCALE_BITS))]

    trajectory = Trajectory(
        states=tuple(mdp.states[i] for i in path), horizon=steps, seed=seed
    )

    total_r = ZERO
    total_c = [ZERO] * mdp.constraint_dim
    for i, count in enumerate(counts):
        if count == 0:
            continue
        j = mdp.actions[i].index(policy.action_for(mdp.states[i]))
        total_r += count * mdp.rewards[i][j]
        for k in range(mdp.constraint_dim):
            total_c[k] += count * mdp.constraints[i][j][k]

    _, gains, absorption = _policy_analysis(mdp, policy)
    decomposition = chains.decompose(chain)
    last = path[-1]
    absorbed = next(
        (c for c, cls in enumerate(decomposition.recurrent_classes) if last in cls),
        None,
    )
    if absorbed is None:
        absorbed_class = stationary = reward_gain = constraint_gain = None
    else:
        cls = decomposition.recurrent_classes[absorbed]
        absorbed_class = tuple(mdp.states[s] for s in cls)
        stationary = chains.stationary_distribution(chain, cls)
        reward_gain = gains[absorbed].reward_gain
        constraint_gain = gains[absorbed].constraint_gain

    report = SimulationReport(
        seed=seed,
        steps=steps,
        start=x,
        visit_counts=tuple(counts),
        visit_frequency=tuple(Fraction(c, steps) for c in counts),
        empirical_V=total_r / steps,
        empirical_W=tuple(c / steps for c in total_c),
        absorbed_class=absorbed_class,
        absorbed_stationary=stationary,
        absorbed_reward_gain=reward_gain,
        absorbed_constraint_gain=constraint_gain,
        analytic_absorption=absorption.row(mdp.state_index(x)),
    )
    return trajectory, report
