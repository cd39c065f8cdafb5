"""Structural analysis of policy-induced Markov chains.

Recurrent classes are the closed strongly connected components of the
support graph; everything else is transient. Stationary distributions and
absorption probabilities come from exact Gaussian elimination over
rationals, so periodic classes are handled through their unique invariant
(Cesaro frequency) vector with no aperiodicity requirement.

All functions are pure over immutable inputs and memoized where repeated
audit passes would otherwise recompute the same decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from cmdpkit.model import Mdp, Policy, induced_chain

Matrix = tuple[tuple[Fraction, ...], ...]


@dataclass(frozen=True)
class ChainDecomposition:
    """Partition of the state indices of a chain.

    ``recurrent_classes`` are sorted by smallest member index, members
    ascending; together with ``transient_states`` they partition the full
    index set.
    """

    recurrent_classes: tuple[tuple[int, ...], ...]
    transient_states: tuple[int, ...]


@dataclass(frozen=True)
class AbsorptionMap:
    """Exact hitting probabilities probs[state][class] of each recurrent class."""

    probs: tuple[tuple[Fraction, ...], ...]

    def row(self, state: int) -> tuple[Fraction, ...]:
        return self.probs[state]


def _strongly_connected_components(adjacency: tuple[tuple[int, ...], ...]) -> list[list[int]]:
    """Iterative Tarjan on an adjacency list, deterministic output order."""
    n = len(adjacency)
    preorder: dict[int, int] = {}
    lowlink: dict[int, int] = {}
    found: set[int] = set()
    scc_queue: list[int] = []
    components: list[list[int]] = []
    counter = 0
    for source in range(n):
        if source in found:
            continue
        stack = [source]
        while stack:
            v = stack[-1]
            if v not in preorder:
                counter += 1
                preorder[v] = counter
            descend = False
            for w in adjacency[v]:
                if w not in preorder:
                    stack.append(w)
                    descend = True
                    break
            if descend:
                continue
            lowlink[v] = preorder[v]
            for w in adjacency[v]:
                if w not in found:
                    if preorder[w] > preorder[v]:
                        lowlink[v] = min(lowlink[v], lowlink[w])
                    else:
                        lowlink[v] = min(lowlink[v], preorder[w])
            stack.pop()
            if lowlink[v] == preorder[v]:
                found.add(v)
                component = [v]
                while scc_queue and preorder[scc_queue[-1]] > preorder[v]:
                    k = scc_queue.pop()
                    found.add(k)
                    component.append(k)
                components.append(sorted(component))
            else:
                scc_queue.append(v)
    return components


def support_adjacency(matrix: Matrix) -> tuple[tuple[int, ...], ...]:
    return tuple(
        tuple(j for j, p in enumerate(row) if p > 0) for row in matrix
    )


def closed_classes(adjacency: tuple[tuple[int, ...], ...]) -> ChainDecomposition:
    """Closed SCCs of an adjacency structure, rest transient."""
    components = _strongly_connected_components(adjacency)
    recurrent: list[tuple[int, ...]] = []
    transient: list[int] = []
    for component in components:
        members = set(component)
        closed = all(
            target in members for v in component for target in adjacency[v]
        )
        if closed:
            recurrent.append(tuple(component))
        else:
            transient.extend(component)
    recurrent.sort(key=lambda cls: cls[0])
    return ChainDecomposition(
        recurrent_classes=tuple(recurrent),
        transient_states=tuple(sorted(transient)),
    )


@lru_cache(maxsize=4096)
def decompose(matrix: Matrix) -> ChainDecomposition:
    """Recurrent classes and transient states of a row-stochastic matrix."""
    return closed_classes(support_adjacency(matrix))


def _solve_linear(a: list[list[Fraction]], rhs: list[list[Fraction]]) -> list[list[Fraction]]:
    """Exact Gauss-Jordan solve of a X = rhs for multiple right-hand columns.

    Raises ValueError on a singular system.
    """
    n = len(a)
    width = len(rhs[0]) if rhs else 0
    aug = [list(a[i]) + list(rhs[i]) for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular linear system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    return [row[n:n + width] for row in aug]


@lru_cache(maxsize=4096)
def stationary_distribution(matrix: Matrix, cls: tuple[int, ...]) -> tuple[Fraction, ...]:
    """Unique invariant vector of a recurrent class, aligned with ``cls``.

    The class must be closed and strongly connected under the chain;
    all returned entries are positive and sum to exactly 1.
    """
    members = set(cls)
    for s in cls:
        for j, p in enumerate(matrix[s]):
            if p > 0 and j not in members:
                raise ValueError(f"class is not closed: state {s} leaks to {j}")
    decomposition = closed_classes(
        tuple(
            tuple(cls.index(j) for j, p in enumerate(matrix[s]) if p > 0)
            for s in cls
        )
    )
    if len(decomposition.recurrent_classes) != 1 or decomposition.transient_states:
        raise ValueError("class is not strongly connected")

    k = len(cls)
    # p (M - I) = 0 with one equation replaced by the normalization sum p = 1.
    a = [[matrix[cls[j]][cls[i]] - (1 if i == j else 0) for j in range(k)]
         for i in range(k)]
    a[0] = [Fraction(1)] * k
    rhs = [[Fraction(1)] if i == 0 else [Fraction(0)] for i in range(k)]
    solution = _solve_linear(a, rhs)
    return tuple(row[0] for row in solution)


@lru_cache(maxsize=2048)
def absorption_map(matrix: Matrix) -> AbsorptionMap:
    """Hitting probabilities of every recurrent class from every state."""
    decomposition = decompose(matrix)
    classes = decomposition.recurrent_classes
    transient = decomposition.transient_states
    n = len(matrix)
    class_of = {}
    for c, cls in enumerate(classes):
        for s in cls:
            class_of[s] = c

    rows: list[list[Fraction]] = [[Fraction(0)] * len(classes) for _ in range(n)]
    for s in range(n):
        if s in class_of:
            rows[s][class_of[s]] = Fraction(1)

    if transient:
        t_index = {s: i for i, s in enumerate(transient)}
        # First-step equations: (I - Q) h_C = one-step mass into C.
        a = [[(1 if i == j else 0) - matrix[s][sp]
              for j, sp in enumerate(transient)]
             for i, s in enumerate(transient)]
        rhs = []
        for s in transient:
            entry = [Fraction(0)] * len(classes)
            for sp, p in enumerate(matrix[s]):
                if p > 0 and sp in class_of:
                    entry[class_of[sp]] += p
            rhs.append(entry)
        solution = _solve_linear([[Fraction(x) for x in row] for row in a], rhs)
        for s, i in t_index.items():
            rows[s] = solution[i]

    return AbsorptionMap(probs=tuple(tuple(row) for row in rows))


def absorption_probabilities(matrix: Matrix, start: int) -> tuple[Fraction, ...]:
    """Absorption row from one start state (class order of decompose)."""
    return absorption_map(matrix).row(start)


@lru_cache(maxsize=16384)
def state_distribution_at(matrix: Matrix, start: int, t: int) -> tuple[Fraction, ...]:
    """Exact distribution of X_t given X_0 = start: row of matrix**t."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t == 0:
        return tuple(
            Fraction(1) if j == start else Fraction(0) for j in range(len(matrix))
        )
    prev = state_distribution_at(matrix, start, t - 1)
    n = len(matrix)
    out = [Fraction(0)] * n
    for i, mass in enumerate(prev):
        if mass != 0:
            row = matrix[i]
            for j in range(n):
                if row[j] != 0:
                    out[j] += mass * row[j]
    return tuple(out)


def reachable_states(mdp: Mdp, policy: Policy | None, x: str) -> tuple[str, ...]:
    """States reachable from x, in model order.

    Under a policy: all states with positive probability at some time.
    With ``policy=None``: the closure over every action of every state
    (the weakly reachable closure used by certificate search). Finite-state
    reachability saturates at t <= number of states - 1.
    """
    start = mdp.state_index(x)
    if policy is None:
        adjacency = []
        for i in range(mdp.num_states):
            targets: set[int] = set()
            for row in mdp.kernel[i]:
                targets.update(j for j, p in enumerate(row) if p > 0)
            adjacency.append(tuple(sorted(targets)))
    else:
        adjacency = [
            tuple(j for j, p in enumerate(row) if p > 0)
            for row in induced_chain(mdp, policy)
        ]
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for s in frontier:
            for j in adjacency[s]:
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return tuple(mdp.states[i] for i in sorted(seen))
