"""Topological and Bowen entropy at finite scale, and separated sets.

The Carathéodory quantity ``M(Z, N, eps, s)`` is the infimum of
``sum_i exp(-s |F_{n_i}|)`` over covers of ``Z`` by Bowen balls of orders
``n_i >= N``.  Orders are truncated to ``[N, n_max]``.  Because every Bowen
ball is a cylinder on ``bowen_domain(F_n, eps)``, the problem becomes a
weighted set cover whose targets are the patterns of ``Z`` on the largest
domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .cover import exact_cover, greedy_cover, split_components
from .errors import DomainError, ResourceLimitError, UnsupportedError
from .group import FolnerSequence, GroupElement
from .shift import (
    Configuration,
    Cylinder,
    Subshift,
    admissible_words,
    bowen_domain,
    pattern_count,
)

DEFAULT_UNIVERSE_CAP = 2 * 10**5
EXACT_SEPARATED_CAP = 24


# subsets -----------------------------------------------------------------------


@dataclass(frozen=True)
class SubsetSpec:
    """A subset ``Z`` of a subshift, resolvable to patterns on a finite domain."""

    subshift: Subshift
    kind: str = "whole_space"
    cylinders: Tuple[Cylinder, ...] = ()
    points: Tuple[Configuration, ...] = field(default=(), compare=False)

    @classmethod
    def whole_space(cls, subshift: Subshift) -> "SubsetSpec":
        return cls(subshift)

    @classmethod
    def union(cls, subshift: Subshift, cylinders) -> "SubsetSpec":
        return cls(subshift, "cylinders", tuple(cylinders))

    @classmethod
    def finite(cls, subshift: Subshift, points) -> "SubsetSpec":
        return cls(subshift, "points", points=tuple(points))

    def resolve(self, domain: Sequence[GroupElement], cap: int = DEFAULT_UNIVERSE_CAP) -> List[Tuple[int, ...]]:
        """Sorted distinct words on ``domain`` (sorted) met by ``Z``."""
        domain = tuple(sorted(frozenset(domain)))
        words = set()

        def add(w):
            words.add(w)
            if len(words) > cap:
                raise ResourceLimitError(
                    f"subset resolves to more than {cap} patterns on {len(domain)} sites",
                    attempted=len(words),
                    cap=cap,
                )

        if self.kind == "whole_space":
            for w in admissible_words(self.subshift, domain)[1]:
                add(w)
        elif self.kind == "cylinders":
            inside = frozenset(domain)
            for c in self.cylinders:
                window = inside | c.support
                order, it = admissible_words(self.subshift, window, fixed=c.assignment)
                keep = [i for i, g in enumerate(order) if g in inside]
                for w in it:
                    add(tuple(w[i] for i in keep))
        elif self.kind == "points":
            for x in self.points:
                add(tuple(int(a) for a in x.symbols(domain)))
        else:
            raise DomainError(f"unknown subset kind {self.kind!r}")
        return sorted(words)


# cover instances ---------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    cylinder: Cylinder
    order: int
    size: int  # |F_order|
    mask: int

    def weight(self, s: float) -> float:
        return math.exp(-s * self.size)


@dataclass(frozen=True)
class CoverInstance:
    universe: Tuple[Cylinder, ...]
    candidates: Tuple[Candidate, ...]
    s: float
    N: int
    n_max: int
    epsilon: float
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def universe_mask(self) -> int:
        return (1 << len(self.universe)) - 1

    @property
    def weights(self) -> List[float]:
        return [c.weight(self.s) for c in self.candidates]

    def at(self, s: float) -> "CoverInstance":
        return CoverInstance(self.universe, self.candidates, s, self.N, self.n_max, self.epsilon, self._cache)

    def components(self):
        if "components" not in self._cache:
            self._cache["components"] = split_components([c.mask for c in self.candidates], self.universe_mask)
        return self._cache["components"]


@dataclass(frozen=True)
class CoverSolution:
    instance: CoverInstance = field(repr=False)
    chosen: Tuple[Candidate, ...]
    total_cost: float
    optimality: str

    def covers(self) -> bool:
        """Every target cylinder lies inside some chosen ball."""
        return all(any(t.is_subset_of(c.cylinder) for c in self.chosen) for t in self.instance.universe)


def build_cover_instance(
    Z: SubsetSpec,
    seq: FolnerSequence,
    N: int,
    n_max: int,
    epsilon: float,
    s: float = 0.0,
    cap: int = DEFAULT_UNIVERSE_CAP,
) -> CoverInstance:
    if not 1 <= N <= n_max:
        raise DomainError("need 1 <= N <= n_max")
    if s < 0:
        raise DomainError("s must be nonnegative")
    group = seq.group
    domains = {n: bowen_domain(group, seq.elements(n), epsilon) for n in range(N, n_max + 1)}
    top = domains[n_max]
    if any(not d <= top for d in domains.values()):
        raise UnsupportedError("Bowen domains must be nested in n")
    order = tuple(sorted(top))
    words = Z.resolve(order, cap)
    universe = tuple(Cylinder(tuple(zip(order, w))) for w in words)
    index = {g: i for i, g in enumerate(order)}

    candidates = []
    for n in range(N, n_max + 1):
        sub = tuple(sorted(domains[n]))
        pos = [index[g] for g in sub]
        groups: Dict[Tuple[int, ...], int] = {}
        for t, w in enumerate(words):
            key = tuple(w[i] for i in pos)
            groups[key] = groups.get(key, 0) | (1 << t)
        size = seq.size(n)
        for key in sorted(groups):
            candidates.append(Candidate(Cylinder(tuple(zip(sub, key))), n, size, groups[key]))
    return CoverInstance(universe, tuple(candidates), float(s), N, n_max, epsilon)


def solve_cover(instance: CoverInstance, solver: str = "exact") -> CoverSolution:
    masks = [c.mask for c in instance.candidates]
    weights = instance.weights
    # tie-break: smaller order, then lexicographic cylinder
    keys = [(c.order, c.cylinder.items) for c in instance.candidates]
    if solver == "exact":
        res = exact_cover(masks, weights, instance.universe_mask, keys, components=instance.components())
    elif solver == "greedy":
        res = greedy_cover(masks, weights, instance.universe_mask, keys)
    else:
        raise DomainError(f"unknown solver {solver!r}")
    return CoverSolution(instance, tuple(instance.candidates[i] for i in res.chosen), res.cost, res.optimality)


def caratheodory_cost(
    Z: SubsetSpec,
    seq: FolnerSequence,
    N: int,
    n_max: int,
    epsilon: float,
    s: float,
    solver: str = "exact",
    cap: int = DEFAULT_UNIVERSE_CAP,
) -> CoverSolution:
    """Finite-scale ``M(Z, N, eps, s)`` with orders in ``[N, n_max]``."""
    return solve_cover(build_cover_instance(Z, seq, N, n_max, epsilon, s, cap), solver)


def greedy_ratio_bound(universe_size: int) -> float:
    """Worst-case greedy/optimal factor recorded for an instance."""
    return 1.0 + math.log(max(universe_size, 1))


# estimates ---------------------------------------------------------------------


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    scale: dict
    method: str
    trace: Tuple[Tuple[float, float], ...] = ()
    detail: dict = field(default_factory=dict)


def topological_entropy_estimate(S: Subshift, seq: FolnerSequence, n: int, epsilon: float) -> EntropyEstimate:
    """``ln(pattern_count on bowen_domain(F_n, eps)) / |F_n|``."""
    if seq.group != S.group:
        raise DomainError("subshift and Følner sequence live over different groups")
    W = bowen_domain(S.group, seq.elements(n), epsilon)
    count = pattern_count(S, W)
    return EntropyEstimate(
        math.log(count) / seq.size(n),
        {"n": n, "epsilon": epsilon},
        "pattern_count",
        detail={"count": count, "domain_size": len(W)},
    )


def bowen_entropy_estimate(
    Z: SubsetSpec,
    seq: FolnerSequence,
    epsilon: float,
    N: int,
    n_max: int,
    solver: str = "exact",
    tol: float = 1e-3,
    cap: int = DEFAULT_UNIVERSE_CAP,
) -> EntropyEstimate:
    """Bisect for the ``s`` at which the finite-scale cover cost crosses 1.

    The cost is continuous and non-increasing in ``s``; its value at ``s = 0``
    is the least number of balls (at least 1).  The bracket starts at
    ``[0, ln k + 1]`` and is doubled if the cost there still exceeds 1.
    """
    base = build_cover_instance(Z, seq, N, n_max, epsilon, 0.0, cap)
    trace: Dict[float, float] = {}

    def cost(s):
        if s not in trace:
            trace[s] = solve_cover(base.at(s), solver).total_cost
        return trace[s]

    lo, hi = 0.0, math.log(Z.subshift.alphabet_size) + 1.0
    expanded = 0
    if cost(lo) <= 1.0:
        value = 0.0
    else:
        while cost(hi) > 1.0:
            lo, hi = hi, 2 * hi
            expanded += 1
            if expanded > 20:
                raise ResourceLimitError("no crossing found below s = 2**20")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if cost(mid) > 1.0:
                lo = mid
            else:
                hi = mid
        value = 0.5 * (lo + hi)
    return EntropyEstimate(
        value,
        {"N": N, "n_max": n_max, "epsilon": epsilon},
        f"caratheodory-{solver}",
        tuple(sorted(trace.items())),
        {
            "universe_size": len(base.universe),
            "candidates": len(base.candidates),
            "bracket_expansions": expanded,
            "tolerance": tol,
        },
    )


# separated sets ------------------------------------------------------------------


@dataclass(frozen=True)
class SeparatedSet:
    indices: Tuple[int, ...]
    mode: str

    @property
    def cardinality(self) -> int:
        return len(self.indices)


def _close_graph(points, F, epsilon):
    if not points:
        return []
    group = points[0].group
    domain = sorted(bowen_domain(group, F, epsilon))
    words = [tuple(int(a) for a in x.symbols(domain)) for x in points]
    n = len(points)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            # y in B_F(x, eps) exactly when the words agree on the domain
            if words[i] == words[j]:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return adj


def separated_set_max(points: Sequence[Configuration], F, epsilon: float, mode: str = "exact") -> SeparatedSet:
    """Largest ``(F, eps)``-separated subfamily of ``points``.

    Two points are separated when neither lies in the other's Bowen ball
    ``B_F(., eps)``.  ``greedy`` keeps points in input order when compatible
    (a maximal family); ``exact`` finds a maximum one by branch and bound.
    """
    points = list(points)
    adj = _close_graph(points, frozenset(F), epsilon)
    n = len(points)
    if mode == "greedy":
        kept, blocked = [], 0
        for i in range(n):
            if not blocked >> i & 1:
                kept.append(i)
                blocked |= adj[i] | (1 << i)
        return SeparatedSet(tuple(kept), "greedy")
    if mode != "exact":
        raise DomainError(f"unknown mode {mode!r}")
    if n > EXACT_SEPARATED_CAP:
        raise ResourceLimitError(f"exact separation is limited to {EXACT_SEPARATED_CAP} points", attempted=n, cap=EXACT_SEPARATED_CAP)

    best = [0]

    def grow(chosen: int, allowed: int):
        if allowed == 0:
            if chosen.bit_count() > best[0].bit_count():
                best[0] = chosen
            return
        if chosen.bit_count() + allowed.bit_count() <= best[0].bit_count():
            return
        v = (allowed & -allowed).bit_length() - 1
        grow(chosen | (1 << v), allowed & ~adj[v] & ~(1 << v))
        grow(chosen, allowed & ~(1 << v))

    grow(0, (1 << n) - 1)
    return SeparatedSet(tuple(i for i in range(n) if best[0] >> i & 1), "exact")
