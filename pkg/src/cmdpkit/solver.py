"""Exhaustive exact solver for the constrained average-reward problem.

maximize V(x) over deterministic stationary policies subject to W(x) >= 0
componentwise. Enumeration order is lexicographic in (state index, action
index) and ties are broken by that order, so every downstream audit is
reproducible.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from cmdpkit.evaluation import evaluate
from cmdpkit.model import Mdp, Policy

ENUM_CAP_ENV = "CMDPKIT_ENUM_CAP"
DEFAULT_ENUM_CAP = 1 << 20


class EnumerationCapExceeded(RuntimeError):
    """Raised when the policy space is larger than the configured cap."""


def enumeration_cap() -> int:
    raw = os.environ.get(ENUM_CAP_ENV)
    if raw is None:
        return DEFAULT_ENUM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise EnumerationCapExceeded(
            f"{ENUM_CAP_ENV} must be an integer, got {raw!r}"
        ) from None
    if cap <= 0:
        raise EnumerationCapExceeded(f"{ENUM_CAP_ENV} must be positive, got {cap}")
    return cap


def policy_count(mdp: Mdp) -> int:
    count = 1
    for acts in mdp.actions:
        count *= len(acts)
    return count


def enumerate_policies(mdp: Mdp) -> Iterator[Policy]:
    """All deterministic stationary policies in lexicographic order."""
    cap = enumeration_cap()
    total = policy_count(mdp)
    if total > cap:
        raise EnumerationCapExceeded(
            f"{total} policies exceed the cap of {cap}; "
            f"raise {ENUM_CAP_ENV} to proceed"
        )
    for combo in itertools.product(*mdp.actions):
        yield Policy(choice=tuple(zip(mdp.states, combo)))


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a constrained solve from one start state."""

    status: str  # "optimal" | "infeasible"
    policy: Policy | None
    value: Fraction | None
    W_at_optimum: tuple[Fraction, ...] | None
    feasible_count: int
    total_count: int


def solve(mdp: Mdp, x: str | None = None) -> SolveResult:
    """Best feasible policy from x (default: the model's initial state).

    Among policies with W(x) >= 0 componentwise, returns one maximizing
    V(x); ties keep the lexicographically first policy. Infeasibility is a
    status, not an error.
    """
    start = mdp.initial_state if x is None else x
    best: Policy | None = None
    best_value: Fraction | None = None
    best_w: tuple[Fraction, ...] | None = None
    feasible = 0
    total = 0
    for policy in enumerate_policies(mdp):
        total += 1
        report = evaluate(mdp, policy, start)
        if any(w < 0 for w in report.W):
            continue
        feasible += 1
        if best_value is None or report.V > best_value:
            best, best_value, best_w = policy, report.V, report.W
    if best is None:
        return SolveResult(
            status="infeasible", policy=None, value=None, W_at_optimum=None,
            feasible_count=0, total_count=total,
        )
    return SolveResult(
        status="optimal", policy=best, value=best_value, W_at_optimum=best_w,
        feasible_count=feasible, total_count=total,
    )
