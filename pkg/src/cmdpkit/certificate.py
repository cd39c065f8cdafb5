"""Optimality certificates: verification and exact search.

A certificate (mu, gain, potential) witnesses optimality of a policy from a
fixed start state through five conditions:

  A1  the policy is feasible at the start state,
  A2  the multiplier vector is nonnegative,
  A3  complementary slackness: mu . W = 0,
  A4  a single-gain Bellman equation in the Lagrangian reward
      r(s,a) + mu . c(s,a) holds at every state reachable under the policy,
  A5  the policy attains the max in A4 at every such state.

The search solves an exact feasibility program: multipliers are forced to
zero on strictly slack components (which linearizes A3 exactly), the gain
and the potential are free, and the Bellman rows are imposed over the
whole all-policies reachable closure of the start state, with equality at
the chosen action of states the policy itself reaches and as inequalities
everywhere else. The closure-wide inequalities are what make a found
certificate a genuine optimality proof: every competing feasible policy
walks inside the closure, so its Lagrangian value telescopes below the
certified gain. Certificates are not unique; callers should only rely on
verdicts, the gain value and residuals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from cmdpkit import chains, lp
from cmdpkit.evaluation import evaluate, _policy_analysis
from cmdpkit.model import Mdp, Policy, validate_policy
from cmdpkit.solver import EnumerationCapExceeded

ZERO = Fraction(0)


class MissingPotentialError(KeyError):
    """The supplied potential lacks a value at a state the check needs."""


@dataclass(frozen=True)
class Certificate:
    """Witness (mu, gain, potential) for conditions A1-A5.

    ``potential`` is total on the all-policies reachable closure of the
    start state; states outside the closure are implicitly zero.
    """

    mu: tuple[Fraction, ...]
    gain: Fraction
    potential: dict[str, Fraction]


@dataclass(frozen=True)
class CertificateReport:
    """Per-condition verdicts plus the Bellman slack of every state-action pair.

    ``bellman_residuals[(s, a)]`` is (gain + L(s)) minus the Lagrangian
    one-step value of action a at s; A4 holds at s when the minimum over
    actions is exactly zero, A5 when the chosen action attains it.
    """

    a1: bool
    a2: bool
    a3: bool
    a4: bool
    a5: bool
    bellman_residuals: dict[tuple[str, str], Fraction]
    verdict: str
    first_failure: str | None


@dataclass(frozen=True)
class ClassGainEquation:
    """Necessary per-class condition: gain = reward_gain + mu . constraint_gain."""

    states: tuple[str, ...]
    reward_gain: Fraction
    constraint_gain: tuple[Fraction, ...]


@dataclass(frozen=True)
class CertificateUnsat:
    """Negative search outcome with the evidence that rules a certificate out.

    ``stage`` is "feasibility" when A1 already fails, "class-gains" when the
    per-class Lagrangian gain equations admit no nonnegative multiplier
    (``conflict`` then names the first contradictory pair of classes), and
    "bellman" when only the full linear program is infeasible.
    """

    stage: str
    reason: str
    W: tuple[Fraction, ...]
    class_equations: tuple[ClassGainEquation, ...]
    conflict: tuple[int, int] | None


def _required_states(mdp: Mdp, reachable: tuple[str, ...]) -> list[str]:
    """Reachable states plus every one-step target under any of their actions."""
    seen = dict.fromkeys(reachable)
    for state in reachable:
        i = mdp.state_index(state)
        for row in mdp.kernel[i]:
            for j, p in enumerate(row):
                if p > 0:
                    seen.setdefault(mdp.states[j])
    return list(seen)


def _one_step_gap(
    mdp: Mdp,
    cert: Certificate,
    potential: dict[str, Fraction],
    state: str,
    action_index: int,
) -> Fraction:
    i = mdp.state_index(state)
    value = mdp.rewards[i][action_index]
    for mu_k, c_k in zip(cert.mu, mdp.constraints[i][action_index]):
        value += mu_k * c_k
    for j, p in enumerate(mdp.kernel[i][action_index]):
        if p > 0:
            value += p * potential[mdp.states[j]]
    return cert.gain + potential[state] - value


def check_certificate(
    mdp: Mdp, x: str, policy: Policy, cert: Certificate
) -> CertificateReport:
    """Verify conditions A1-A5 exactly and report every Bellman residual."""
    validate_policy(mdp, policy)
    if len(cert.mu) != mdp.constraint_dim:
        raise ValueError(
            f"multiplier has length {len(cert.mu)}, "
            f"model constraint_dim is {mdp.constraint_dim}"
        )

    report = evaluate(mdp, policy, x)
    a1 = all(w >= 0 for w in report.W)
    a2 = all(m >= 0 for m in cert.mu)
    a3 = sum((m * w for m, w in zip(cert.mu, report.W)), ZERO) == 0

    reachable = chains.reachable_states(mdp, policy, x)
    potential = dict(cert.potential)
    missing = [s for s in _required_states(mdp, reachable) if s not in potential]
    if missing:
        raise MissingPotentialError(
            f"potential missing required states: {missing}"
        )

    residuals: dict[tuple[str, str], Fraction] = {}
    a4 = True
    a5 = True
    for state in reachable:
        i = mdp.state_index(state)
        gaps = []
        for j, action in enumerate(mdp.actions[i]):
            gap = _one_step_gap(mdp, cert, potential, state, j)
            residuals[(state, action)] = gap
            gaps.append(gap)
        if min(gaps) != 0:
            a4 = False
        if residuals[(state, policy.action_for(state))] != 0:
            a5 = False

    flags = {"A1": a1, "A2": a2, "A3": a3, "A4": a4, "A5": a5}
    first_failure = next((name for name, ok in flags.items() if not ok), None)
    return CertificateReport(
        a1=a1, a2=a2, a3=a3, a4=a4, a5=a5,
        bellman_residuals=residuals,
        verdict="pass" if first_failure is None else "fail",
        first_failure=first_failure,
    )


def _class_equations(
    mdp: Mdp, policy: Policy, x: str
) -> tuple[ClassGainEquation, ...]:
    """Gain equations of the recurrent classes reachable from x under policy."""
    _, gains, absorption = _policy_analysis(mdp, policy)
    row = absorption.row(mdp.state_index(x))
    return tuple(
        ClassGainEquation(
            states=gain.states,
            reward_gain=gain.reward_gain,
            constraint_gain=gain.constraint_gain,
        )
        for prob, gain in zip(row, gains)
        if prob > 0
    )


def _class_system_feasible(
    equations: tuple[ClassGainEquation, ...], free_mu: list[int]
) -> bool:
    # Variables: mu components that A3 leaves free, then the shared gain.
    gain_var = len(free_mu)
    constraints = [
        lp.LinearConstraint.of(
            {gain_var: Fraction(1)}
            | {k: -eq.constraint_gain[i] for k, i in enumerate(free_mu)},
            lp.EQ,
            eq.reward_gain,
        )
        for eq in equations
    ]
    point = lp.find_feasible_point(
        num_vars=len(free_mu) + 1,
        constraints=constraints,
        nonnegative=set(range(len(free_mu))),
    )
    return point is not None


def find_certificate(
    mdp: Mdp, x: str, policy: Policy, closure_cap: int = 10_000
) -> Certificate | CertificateUnsat:
    """Search for a certificate; every returned one passes check_certificate.

    Returns CertificateUnsat when the program has no witness: either the
    policy is infeasible at x, or the classes it reaches would need
    distinct Lagrangian gains, or the closure-wide Bellman feasibility
    program has no solution.
    """
    validate_policy(mdp, policy)
    report = evaluate(mdp, policy, x)
    equations = _class_equations(mdp, policy, x)
    if any(w < 0 for w in report.W):
        return CertificateUnsat(
            stage="feasibility",
            reason="policy violates the constraint at the start state (A1)",
            W=report.W,
            class_equations=equations,
            conflict=None,
        )

    closure = chains.reachable_states(mdp, None, x)
    if len(closure) > closure_cap:
        raise EnumerationCapExceeded(
            f"reachable closure has {len(closure)} states, cap is {closure_cap}"
        )

    free_mu = [i for i, w in enumerate(report.W) if w == 0]
    if not _class_system_feasible(equations, free_mu):
        conflict = None
        for a in range(len(equations)):
            for b in range(a + 1, len(equations)):
                if not _class_system_feasible(
                    (equations[a], equations[b]), free_mu
                ):
                    conflict = (a, b)
                    break
            if conflict:
                break
        return CertificateUnsat(
            stage="class-gains",
            reason=(
                "reachable recurrent classes admit no common Lagrangian gain "
                "with nonnegative multipliers"
            ),
            W=report.W,
            class_equations=equations,
            conflict=conflict,
        )

    # The closure is closed under every action, so it is exactly the
    # domain the Bellman rows need.
    reachable = set(chains.reachable_states(mdp, policy, x))
    var_of_state = {s: len(free_mu) + 1 + k for k, s in enumerate(closure)}
    gain_var = len(free_mu)
    num_vars = len(free_mu) + 1 + len(closure)

    constraints = []
    for state in closure:
        i = mdp.state_index(state)
        chosen = policy.action_for(state)
        for j, action in enumerate(mdp.actions[i]):
            coeffs: dict[int, Fraction] = {gain_var: Fraction(1)}
            coeffs[var_of_state[state]] = coeffs.get(var_of_state[state], ZERO) + 1
            for target, p in enumerate(mdp.kernel[i][j]):
                if p > 0:
                    v = var_of_state[mdp.states[target]]
                    coeffs[v] = coeffs.get(v, ZERO) - p
            for k, comp in enumerate(free_mu):
                coeffs[k] = coeffs.get(k, ZERO) - mdp.constraints[i][j][comp]
            sense = lp.EQ if (state in reachable and action == chosen) else lp.GE
            constraints.append(
                lp.LinearConstraint.of(coeffs, sense, mdp.rewards[i][j])
            )

    point = lp.find_feasible_point(
        num_vars=num_vars,
        constraints=constraints,
        nonnegative=set(range(len(free_mu))),
    )
    if point is None:
        return CertificateUnsat(
            stage="bellman",
            reason="the closure-wide Bellman feasibility program is infeasible",
            W=report.W,
            class_equations=equations,
            conflict=None,
        )

    mu = [ZERO] * mdp.constraint_dim
    for k, comp in enumerate(free_mu):
        mu[comp] = point[k]
    potential = {s: point[var_of_state[s]] for s in closure}
    cert = Certificate(mu=tuple(mu), gain=point[gain_var], potential=potential)

    verification = check_certificate(mdp, x, policy, cert)
    if verification.verdict != "pass":
        raise AssertionError(
            f"internal error: searched certificate fails {verification.first_failure}"
        )
    return cert
