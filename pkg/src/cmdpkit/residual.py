"""Residual constraint slackness and time-consistency audits.

Moving from the start state x to a reachable state y consumes (or gains)
part of the constraint budget. The residual slackness quantifies that
exactly: it is the negated expected constraint value over the complementary
time-t event, rescaled by the odds of reaching y. The original policy is
feasible, and optimal under certificate hypotheses, for the shifted problem
that starts at y; the audit re-solves both the unmodified and the shifted
problem at every reachable state and reports where plain optimality breaks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from cmdpkit import chains
from cmdpkit.certificate import Certificate, find_certificate
from cmdpkit.evaluation import evaluate
from cmdpkit.model import Mdp, Policy, induced_chain, validate_policy
from cmdpkit.solver import solve

ZERO = Fraction(0)


class UnreachableStateError(ValueError):
    """Target state has probability zero at the requested time."""


@dataclass(frozen=True)
class ResidualSpec:
    """Slack C consumed in moving from ``source`` to ``target`` at ``time``.

    Invariant (exact): W(source) = (W(target) - slack) * prob_to plus the
    contribution of the complementary time-t event.
    """

    source: str
    target: str
    time: int
    prob_to: Fraction
    slack: tuple[Fraction, ...]


def residual_slack(
    mdp: Mdp, policy: Policy, x: str, y: str, t: int | None = None
) -> ResidualSpec:
    """Exact residual slackness of the constraint at y, reached from x at t.

    With ``t=None`` the smallest time with positive reaching probability is
    used. Raises UnreachableStateError when that probability is zero; the
    computation never divides by zero.
    """
    validate_policy(mdp, policy)
    chain = induced_chain(mdp, policy)
    start = mdp.state_index(x)
    target = mdp.state_index(y)

    if t is None:
        t = next(
            (
                step
                for step in range(mdp.num_states + 1)
                if chains.state_distribution_at(chain, start, step)[target] > 0
            ),
            None,
        )
        if t is None:
            raise UnreachableStateError(
                f"state {y!r} is not reachable from {x!r} under the policy"
            )
    elif t < 0:
        raise ValueError("time must be nonnegative")

    distribution = chains.state_distribution_at(chain, start, t)
    prob = distribution[target]
    if prob == 0:
        raise UnreachableStateError(
            f"state {y!r} has probability zero at time {t} from {x!r}"
        )

    slack = [ZERO] * mdp.constraint_dim
    for s, mass in enumerate(distribution):
        if mass == 0 or s == target:
            continue
        w = evaluate(mdp, policy, mdp.states[s]).W
        for k in range(mdp.constraint_dim):
            slack[k] -= mass * w[k]
    slack = [component / prob for component in slack]
    return ResidualSpec(source=x, target=y, time=t, prob_to=prob, slack=tuple(slack))


def build_residual_problem(mdp: Mdp, spec: ResidualSpec) -> Mdp:
    """Same model with every constraint vector shifted by -slack, started at y.

    Kernel and rewards are untouched; the shift applies uniformly to every
    state and action.
    """
    shifted = tuple(
        tuple(
            tuple(c - d for c, d in zip(cvec, spec.slack))
            for cvec in per_action
        )
        for per_action in mdp.constraints
    )
    return replace(mdp, constraints=shifted, initial_state=spec.target)


@dataclass(frozen=True)
class AuditEntry:
    """Audit of one reachable (state, time) pair.

    ``consistent`` captures decision regret: it is False exactly when the
    *unmodified* problem restarted at this state admits a feasible policy
    doing strictly better than the audited one (or is feasible while the
    audited policy is not). When the unmodified problem is infeasible there
    is no better decision to regret and the entry is vacuously consistent.
    The residual fields describe the shifted problem, for which feasibility
    of the audited policy always transfers.
    """

    state: str
    time: int
    prob: Fraction
    slack: tuple[Fraction, ...]
    policy_value_here: Fraction
    policy_feasible_here: bool
    unmodified_status: str
    unmodified_value: Fraction | None
    unmodified_policy: Policy | None
    consistent: bool
    residual_status: str
    residual_value: Fraction | None
    residual_policy: Policy | None
    policy_feasible_residual: bool
    policy_optimal_residual: bool
    identity: str  # "verified" | "failed" | "not-applicable-no-certificate"


@dataclass(frozen=True)
class ConsistencyAuditReport:
    start: str
    policy: Policy
    value: Fraction
    certificate_status: str  # "found" | "unsat"
    mu: tuple[Fraction, ...] | None
    entries: tuple[AuditEntry, ...]

    @property
    def consistent(self) -> bool:
        return all(entry.consistent for entry in self.entries)


def _reachable_times(
    mdp: Mdp, chain, start: int, all_times: bool
) -> list[tuple[int, int]]:
    """(time, state index) pairs to audit, ordered by time then model order."""
    horizon = mdp.num_states
    pairs: list[tuple[int, int]] = []
    seen: set[int] = set()
    for t in range(horizon + 1):
        distribution = chains.state_distribution_at(chain, start, t)
        for s, mass in enumerate(distribution):
            if mass > 0 and (all_times or s not in seen):
                pairs.append((t, s))
                seen.add(s)
    return pairs


def audit_time_consistency(
    mdp: Mdp, x: str | None = None, all_times: bool = False
) -> ConsistencyAuditReport:
    """Audit the solver's optimal policy at every reachable (state, time).

    By default each reachable state is audited at its smallest reaching
    time; ``all_times=True`` audits every time up to the state count. The
    certificate value identity V(y) = gain - mu . C_y(x) is checked only
    when a certificate exists at x; otherwise it is reported as
    not-applicable and residual optimality is still re-verified directly.
    """
    start_label = mdp.initial_state if x is None else x
    base = solve(mdp, start_label)
    if base.status != "optimal":
        raise ValueError(f"no feasible policy from {start_label!r}; nothing to audit")
    policy = base.policy
    assert policy is not None and base.value is not None

    cert = find_certificate(mdp, start_label, policy)
    cert_found = isinstance(cert, Certificate)

    chain = induced_chain(mdp, policy)
    start = mdp.state_index(start_label)
    entries: list[AuditEntry] = []
    for t, s in _reachable_times(mdp, chain, start, all_times):
        y = mdp.states[s]
        spec = residual_slack(mdp, policy, start_label, y, t)

        here = evaluate(mdp, policy, y)
        feasible_here = all(w >= 0 for w in here.W)
        unmodified = solve(mdp, y)
        consistent = unmodified.status != "optimal" or (
            feasible_here and unmodified.value == here.V
        )

        residual_mdp = build_residual_problem(mdp, spec)
        residual = solve(residual_mdp, y)
        shifted = evaluate(residual_mdp, policy, y)
        feasible_residual = all(w >= 0 for w in shifted.W)
        optimal_residual = (
            feasible_residual
            and residual.status == "optimal"
            and residual.value == shifted.V
        )

        if cert_found:
            predicted = cert.gain - sum(
                (m * c for m, c in zip(cert.mu, spec.slack)), ZERO
            )
            identity = "verified" if here.V == predicted else "failed"
        else:
            identity = "not-applicable-no-certificate"

        entries.append(AuditEntry(
            state=y,
            time=t,
            prob=spec.prob_to,
            slack=spec.slack,
            policy_value_here=here.V,
            policy_feasible_here=feasible_here,
            unmodified_status=unmodified.status,
            unmodified_value=unmodified.value,
            unmodified_policy=unmodified.policy,
            consistent=consistent,
            residual_status=residual.status,
            residual_value=residual.value,
            residual_policy=residual.policy,
            policy_feasible_residual=feasible_residual,
            policy_optimal_residual=optimal_residual,
            identity=identity,
        ))

    return ConsistencyAuditReport(
        start=start_label,
        policy=policy,
        value=base.value,
        certificate_status="found" if cert_found else "unsat",
        mu=cert.mu if cert_found else None,
        entries=tuple(entries),
    )
