"""MDP data model: exact rationals, instance parsing, validation.

A model instance is a finite state set, per-state action sets, an exact
rational transition kernel, a scalar reward per (state, action) and a
constraint vector per (state, action). Every numeric quantity is a
``fractions.Fraction``; instance documents carry numbers as strings
("0.125" or "1/8") so that no binary float is ever involved.

All types here are frozen dataclasses built from tuples, hence hashable;
downstream modules rely on that for memoized chain analysis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path


class InstanceFormatError(ValueError):
    """Raised when an instance document is syntactically or structurally bad."""


class PolicyError(ValueError):
    """Raised when a policy is not a valid total choice map for a model."""


def parse_rational(text: str) -> Fraction:
    """Parse "p/q", decimal ("0.125") or integer ("5") strings exactly.

    Decimal literals become exact decimal fractions (0.125 -> 1/8), never
    binary floats.
    """
    if not isinstance(text, str):
        raise InstanceFormatError(
            f"numbers must be strings to stay exact, got {type(text).__name__}: {text!r}"
        )
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceFormatError(f"not a rational literal: {text!r} ({exc})") from None


def format_rational(value: Fraction) -> str:
    """Canonical "p/q" form, denominator always explicit ("5" -> "5/1")."""
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Mdp:
    """Finite constrained MDP with exact rational data.

    Fields are index-aligned: ``actions[i]`` lists the action labels of
    ``states[i]``; ``kernel[i][j]`` is the dense transition row (over all
    states, in model order) of action j at state i; ``rewards[i][j]`` and
    ``constraints[i][j]`` the stagewise reward and constraint vector.
    """

    states: tuple[str, ...]
    actions: tuple[tuple[str, ...], ...]
    kernel: tuple[tuple[tuple[Fraction, ...], ...], ...]
    rewards: tuple[tuple[Fraction, ...], ...]
    constraints: tuple[tuple[tuple[Fraction, ...], ...], ...]
    constraint_dim: int
    initial_state: str

    def state_index(self, label: str) -> int:
        try:
            return _state_index_map(self)[label]
        except KeyError:
            raise KeyError(f"unknown state {label!r}") from None

    def action_index(self, state: str, action: str) -> int:
        i = self.state_index(state)
        try:
            return self.actions[i].index(action)
        except ValueError:
            raise KeyError(f"state {state!r} has no action {action!r}") from None

    @property
    def initial_index(self) -> int:
        return self.state_index(self.initial_state)

    @property
    def num_states(self) -> int:
        return len(self.states)


@lru_cache(maxsize=4096)
def _state_index_map(mdp: Mdp) -> dict[str, int]:
    return {label: i for i, label in enumerate(mdp.states)}


@dataclass(frozen=True)
class Policy:
    """Deterministic stationary policy: one action label per state.

    ``choice`` holds (state, action) pairs in model state order.
    """

    choice: tuple[tuple[str, str], ...]

    def action_for(self, state: str) -> str:
        try:
            return _choice_map(self)[state]
        except KeyError:
            raise PolicyError(f"policy does not cover state {state!r}") from None

    def as_dict(self) -> dict[str, str]:
        return dict(self.choice)

    @staticmethod
    def from_mapping(mdp: Mdp, mapping: dict[str, str]) -> "Policy":
        """Build a total policy, defaulting single-action states.

        States with exactly one action may be omitted from ``mapping``;
        every state with two or more actions must be named.
        """
        pairs = []
        for i, state in enumerate(mdp.states):
            if state in mapping:
                pairs.append((state, mapping[state]))
            elif len(mdp.actions[i]) == 1:
                pairs.append((state, mdp.actions[i][0]))
            else:
                raise PolicyError(
                    f"state {state!r} has {len(mdp.actions[i])} actions; "
                    "an explicit choice is required"
                )
        unknown = set(mapping) - set(mdp.states)
        if unknown:
            raise PolicyError(f"policy names unknown states: {sorted(unknown)}")
        policy = Policy(choice=tuple(pairs))
        validate_policy(mdp, policy)
        return policy


@lru_cache(maxsize=16384)
def _choice_map(policy: Policy) -> dict[str, str]:
    return dict(policy.choice)


def validate_policy(mdp: Mdp, policy: Policy) -> None:
    """Raise PolicyError unless policy is a total valid choice map."""
    seen = dict(policy.choice)
    for i, state in enumerate(mdp.states):
        if state not in seen:
            raise PolicyError(f"policy does not cover state {state!r}")
        if seen[state] not in mdp.actions[i]:
            raise PolicyError(
                f"policy selects action {seen[state]!r} absent from state {state!r}"
            )
    extra = set(seen) - set(mdp.states)
    if extra:
        raise PolicyError(f"policy names unknown states: {sorted(extra)}")


@dataclass(frozen=True)
class Trajectory:
    """Realized state sequence X_0 .. X_{T-1} with its generating seed."""

    states: tuple[str, ...]
    horizon: int
    seed: int


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    kind: str
    state: str | None
    action: str | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


class ValidationError(ValueError):
    """Raised by parse_instance when the parsed model violates invariants."""

    def __init__(self, report: ValidationReport):
        self.report = report
        lines = "; ".join(v.message for v in report.violations)
        super().__init__(f"invalid instance: {lines}")


def validate(mdp: Mdp) -> ValidationReport:
    """Check every structural invariant; the report lists all violations.

    An empty report means the model is well formed. Rewards and constraints
    at transient states are ordinary data and are not special-cased.
    """
    violations: list[Violation] = []

    def add(kind: str, state: str | None, action: str | None, message: str) -> None:
        violations.append(Violation(kind, state, action, message))

    labels = list(mdp.states)
    if len(set(labels)) != len(labels):
        dupes = sorted({s for s in labels if labels.count(s) > 1})
        add("duplicate-state", None, None, f"duplicate state labels: {dupes}")
    if mdp.initial_state not in set(labels):
        add("initial-state", None, None,
            f"initial state {mdp.initial_state!r} is not a model state")

    n = mdp.constraint_dim
    if n < 0:
        add("constraint-dim", None, None, f"constraint_dim must be >= 0, got {n}")

    for i, state in enumerate(mdp.states):
        acts = mdp.actions[i]
        if not acts:
            add("no-actions", state, None, f"state {state!r} has no actions")
        if len(set(acts)) != len(acts):
            add("duplicate-action", state, None,
                f"state {state!r} has duplicate action labels")
        for j, action in enumerate(acts):
            row = mdp.kernel[i][j]
            if len(row) != len(mdp.states):
                add("row-shape", state, action,
                    f"kernel row of ({state!r}, {action!r}) has length {len(row)}")
                continue
            negatives = [mdp.states[k] for k, p in enumerate(row) if p < 0]
            if negatives:
                add("row-negative", state, action,
                    f"negative transition probability at ({state!r}, {action!r}) "
                    f"towards {negatives}")
            total = sum(row, Fraction(0))
            if total != 1:
                add("row-sum", state, action,
                    f"kernel row of ({state!r}, {action!r}) sums to "
                    f"{format_rational(total)}, not 1")
            if len(mdp.constraints[i][j]) != n:
                add("constraint-length", state, action,
                    f"constraint vector of ({state!r}, {action!r}) has length "
                    f"{len(mdp.constraints[i][j])}, expected {n}")

    return ValidationReport(violations=tuple(violations))


# ---------------------------------------------------------------------------
# instance documents

def parse_instance(text: str) -> Mdp:
    """Parse and validate a UTF-8 JSON instance document.

    Raises InstanceFormatError on syntax/schema problems (with position or
    path information) and ValidationError when the parsed model violates a
    structural invariant.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    mdp = _mdp_from_document(doc)
    report = validate(mdp)
    if not report.ok:
        raise ValidationError(report)
    return mdp


def load_instance(path: str | Path) -> Mdp:
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def _require(doc: dict, key: str, kind: type, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise InstanceFormatError(f"missing key {key!r} in {where}")
    value = doc[key]
    if not isinstance(value, kind):
        raise InstanceFormatError(
            f"{where}.{key} must be {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _mdp_from_document(doc) -> Mdp:
    if not isinstance(doc, dict):
        raise InstanceFormatError("document root must be a JSON object")
    constraint_dim = _require(doc, "constraint_dim", int, "document")
    if isinstance(constraint_dim, bool):
        raise InstanceFormatError("document.constraint_dim must be an integer")
    initial = _require(doc, "initial_state", str, "document")
    state_docs = _require(doc, "states", list, "document")
    if not state_docs:
        raise InstanceFormatError("document.states must be nonempty")

    labels: list[str] = []
    for k, sdoc in enumerate(state_docs):
        labels.append(_require(sdoc, "id", str, f"states[{k}]"))
    index = {label: i for i, label in enumerate(labels)}

    actions: list[tuple[str, ...]] = []
    kernel: list[tuple[tuple[Fraction, ...], ...]] = []
    rewards: list[tuple[Fraction, ...]] = []
    constraints: list[tuple[tuple[Fraction, ...], ...]] = []
    for k, sdoc in enumerate(state_docs):
        where = f"states[{k}] ({labels[k]!r})"
        action_docs = _require(sdoc, "actions", list, where)
        state_actions: list[str] = []
        state_rows: list[tuple[Fraction, ...]] = []
        state_rewards: list[Fraction] = []
        state_constraints: list[tuple[Fraction, ...]] = []
        for m, adoc in enumerate(action_docs):
            awhere = f"{where}.actions[{m}]"
            state_actions.append(_require(adoc, "id", str, awhere))
            state_rewards.append(parse_rational(_require(adoc, "reward", str, awhere)))
            cvec = _require(adoc, "constraint", list, awhere)
            state_constraints.append(tuple(parse_rational(c) for c in cvec))
            trans = _require(adoc, "transitions", dict, awhere)
            row = [Fraction(0)] * len(labels)
            for target, prob in trans.items():
                if target not in index:
                    raise InstanceFormatError(
                        f"{awhere}.transitions names unknown state {target!r}"
                    )
                row[index[target]] = parse_rational(prob)
            state_rows.append(tuple(row))
        actions.append(tuple(state_actions))
        kernel.append(tuple(state_rows))
        rewards.append(tuple(state_rewards))
        constraints.append(tuple(state_constraints))

    return Mdp(
        states=tuple(labels),
        actions=tuple(actions),
        kernel=tuple(kernel),
        rewards=tuple(rewards),
        constraints=tuple(constraints),
        constraint_dim=constraint_dim,
        initial_state=initial,
    )


def serialize_instance(mdp: Mdp) -> dict:
    """Document form of a model; all rationals as canonical "p/q" strings."""
    states = []
    for i, state in enumerate(mdp.states):
        action_docs = []
        for j, action in enumerate(mdp.actions[i]):
            transitions = {
                mdp.states[k]: format_rational(p)
                for k, p in enumerate(mdp.kernel[i][j])
                if p != 0
            }
            action_docs.append({
                "id": action,
                "reward": format_rational(mdp.rewards[i][j]),
                "constraint": [format_rational(c) for c in mdp.constraints[i][j]],
                "transitions": transitions,
            })
        states.append({"id": state, "actions": action_docs})
    return {
        "constraint_dim": mdp.constraint_dim,
        "initial_state": mdp.initial_state,
        "states": states,
    }


def instance_to_json(mdp: Mdp) -> str:
    """Deterministic JSON rendering of serialize_instance."""
    return json.dumps(serialize_instance(mdp), indent=2, sort_keys=True) + "\n"


def induced_chain(mdp: Mdp, policy: Policy) -> tuple[tuple[Fraction, ...], ...]:
    """Square stochastic matrix of the policy-induced Markov chain.

    Row order is model state order; rows are dense and sum to exactly 1.
    """
    validate_policy(mdp, policy)
    rows = []
    for i, state in enumerate(mdp.states):
        j = mdp.actions[i].index(policy.action_for(state))
        rows.append(mdp.kernel[i][j])
    return tuple(rows)
