"""Subshifts over amenable groups: configurations, cylinders, Bowen balls.

Conventions
-----------
* The action is ``(g.x)(h) = x(h g)``, so ``(g.x)(e) = x(g)``.
* The metric is ``d(x, y) = 2**-i`` where ``g_i`` is the first element of the
  canonical enumeration (1-based) at which ``x`` and ``y`` differ.
* With this metric a Bowen ball ``B_F(x, eps)`` is the cylinder fixing ``x`` on
  ``{g_i g : i <= m(eps), g in F}`` with ``m(eps) = floor(log2(1/eps))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, GroupMismatchError, ResourceLimitError, UnsupportedError
from .group import AmenableGroup, GroupElement

DEFAULT_NODE_CAP = 10**7


def dyadic_depth(epsilon: float) -> int:
    """Largest ``m >= 0`` with ``2**-m >= epsilon``, i.e. ``floor(log2(1/epsilon))``."""
    if not 0 < epsilon <= 1:
        raise DomainError("epsilon must lie in (0, 1]")
    m = 0
    while 2.0 ** -(m + 1) >= epsilon:
        m += 1
    return m


def enumerate_group(group: AmenableGroup, m: int) -> Tuple[GroupElement, ...]:
    return group.enumerate(m)


# cylinders -------------------------------------------------------------------


@dataclass(frozen=True)
class Cylinder:
    """The set of configurations taking prescribed symbols on a finite support."""

    items: Tuple[Tuple[GroupElement, int], ...]

    def __post_init__(self):
        support = [g for g, _ in self.items]
        if len(set(support)) != len(support):
            raise DomainError("cylinder support has repeated elements")
        object.__setattr__(self, "items", tuple(sorted(self.items)))

    @classmethod
    def from_mapping(cls, assignment: Mapping[GroupElement, int]) -> "Cylinder":
        return cls(tuple((g, int(a)) for g, a in assignment.items()))

    @classmethod
    def from_symbols(cls, support: Sequence[GroupElement], symbols: Sequence[int]) -> "Cylinder":
        return cls(tuple(zip(support, (int(a) for a in symbols))))

    @property
    def support(self) -> frozenset:
        return frozenset(g for g, _ in self.items)

    @property
    def assignment(self) -> Dict[GroupElement, int]:
        return dict(self.items)

    def __len__(self):
        return len(self.items)

    def contains(self, x: "Configuration") -> bool:
        if not self.items:
            return True
        support = [g for g, _ in self.items]
        values = np.fromiter((a for _, a in self.items), dtype=np.int64, count=len(self.items))
        return bool(np.array_equal(x.symbols(support), values))

    def translate(self, group: AmenableGroup, g: GroupElement) -> "Cylinder":
        """The cylinder ``{x : g.x in self}``, supported on ``{h g}``."""
        return Cylinder(tuple((group.multiply(h, g), a) for h, a in self.items))

    def restrict(self, domain: Iterable[GroupElement]) -> "Cylinder":
        domain = frozenset(domain)
        return Cylinder(tuple((g, a) for g, a in self.items if g in domain))

    def merge(self, other: "Cylinder") -> Optional["Cylinder"]:
        """Intersection as a cylinder, or ``None`` when the assignments clash."""
        out = dict(self.items)
        for g, a in other.items:
            if out.setdefault(g, a) != a:
                return None
        return Cylinder.from_mapping(out)

    def is_subset_of(self, other: "Cylinder") -> bool:
        """Set inclusion in the full shift: ``other`` fixes fewer coordinates, consistently."""
        mine = dict(self.items)
        return all(mine.get(g) == a for g, a in other.items)


# subshifts ---------------------------------------------------------------------


@dataclass(frozen=True)
class Subshift:
    """A subshift of finite type given by forbidden cylinders (none: full shift)."""

    group: AmenableGroup
    alphabet_size: int
    forbidden: Tuple[Cylinder, ...] = ()

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise DomainError("alphabet needs at least two symbols")
        for p in self.forbidden:
            if not p.items:
                raise DomainError("a forbidden pattern needs nonempty support")
            for g, a in p.items:
                self.group.check(g)
                if not 0 <= a < self.alphabet_size:
                    raise DomainError(f"forbidden symbol {a} outside the alphabet")

    @classmethod
    def full(cls, group: AmenableGroup, alphabet_size: int = 2) -> "Subshift":
        return cls(group, alphabet_size)

    @classmethod
    def golden_mean(cls) -> "Subshift":
        """Binary sequences over ``Z`` without two adjacent 1s."""
        return cls(AmenableGroup.integers(), 2, (Cylinder(((0, 1), (1, 1))),))

    @property
    def is_full(self) -> bool:
        return not self.forbidden

    def placements(self, W: Iterable[GroupElement]) -> List[Tuple[Tuple[GroupElement, int], ...]]:
        """Translates of forbidden patterns whose support lies inside ``W``.

        Each placement lists the ``(w, symbol)`` pairs it forbids jointly.
        """
        W = frozenset(W)
        group = self.group
        out = set()
        for p in self.forbidden:
            for h0, _ in p.items:
                h0_inv = group.inverse(h0)
                for w in W:
                    g = group.multiply(h0_inv, w)
                    moved = tuple((group.multiply(h, g), a) for h, a in p.items)
                    if all(v in W for v, _ in moved):
                        out.add(tuple(sorted(moved)))
        return sorted(out)

    def is_admissible(self, pattern: Cylinder) -> bool:
        """Local admissibility: no forbidden pattern occurs inside the support."""
        values = pattern.assignment
        for placement in self.placements(values):
            if all(values[v] == a for v, a in placement):
                return False
        return True


class _Search:
    """Backtracking over assignments of ``W`` in sorted order."""

    def __init__(self, subshift: Subshift, W: Iterable[GroupElement], node_cap: int, fixed: Optional[Mapping] = None):
        self.k = subshift.alphabet_size
        self.order = tuple(sorted(frozenset(W)))
        pos = {g: i for i, g in enumerate(self.order)}
        fixed = fixed or {}
        self.choices = [(fixed[g],) if g in fixed else tuple(range(self.k)) for g in self.order]
        self.checks: List[List[Tuple[Tuple[int, int], ...]]] = [[] for _ in self.order]
        last_constrained = -1
        for placement in subshift.placements(self.order):
            idx = tuple((pos[v], a) for v, a in placement)
            last = max(i for i, _ in idx)
            self.checks[last].append(idx)
            last_constrained = max(last_constrained, last)
        self.last_constrained = last_constrained
        self.node_cap = node_cap
        self.nodes = 0

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.node_cap:
            raise ResourceLimitError(
                f"pattern search exceeded {self.node_cap} nodes on a window of size {len(self.order)}",
                attempted=self.nodes,
                cap=self.node_cap,
            )

    def _ok(self, word, i):
        for idx in self.checks[i]:
            if all(word[j] == a for j, a in idx):
                return False
        return True

    def count(self) -> int:
        word = [0] * len(self.order)
        n = len(self.order)

        def rec(i):
            if i > self.last_constrained:
                return math.prod(len(c) for c in self.choices[i:])
            self._tick()
            total = 0
            for a in self.choices[i]:
                word[i] = a
                if self._ok(word, i):
                    total += rec(i + 1)
            return total

        return rec(0)

    def words(self) -> Iterator[Tuple[int, ...]]:
        word = [0] * len(self.order)
        n = len(self.order)

        def rec(i):
            if i == n:
                yield tuple(word)
                return
            self._tick()
            for a in self.choices[i]:
                word[i] = a
                if self._ok(word, i):
                    yield from rec(i + 1)

        yield from rec(0)


def admissible_words(
    subshift: Subshift, W: Iterable[GroupElement], node_cap: int = DEFAULT_NODE_CAP, fixed: Optional[Mapping] = None
) -> Tuple[Tuple[GroupElement, ...], Iterator[Tuple[int, ...]]]:
    """Sorted ``W`` with an iterator over its locally admissible words.

    ``fixed`` pins symbols at some coordinates of ``W``.
    """
    search = _Search(subshift, W, node_cap, fixed)
    return search.order, search.words()


def admissible_patterns(subshift: Subshift, W, node_cap: int = DEFAULT_NODE_CAP) -> Iterator[Cylinder]:
    order, words = admissible_words(subshift, W, node_cap)
    for w in words:
        yield Cylinder(tuple(zip(order, w)))


def _interval(W) -> Optional[Tuple[int, int]]:
    pts = sorted(W)
    if pts and all(isinstance(p, int) for p in pts) and pts[-1] - pts[0] + 1 == len(pts):
        return pts[0], len(pts)
    return None


def _transfer_count(subshift: Subshift, length: int, node_cap: int) -> int:
    spans = [max(g for g, _ in p.items) - min(g for g, _ in p.items) for p in subshift.forbidden]
    block = max(spans + [1])
    if length <= block:
        return _Search(subshift, range(length), node_cap).count()
    states = list(_Search(subshift, range(block), node_cap).words())
    index = {s: i for i, s in enumerate(states)}
    size = len(states)
    A = np.zeros((size, size), dtype=object)
    A[:, :] = 0
    for u in states:
        for a in range(subshift.alphabet_size):
            w = u + (a,)
            if subshift.is_admissible(Cylinder.from_symbols(range(block + 1), w)):
                A[index[u], index[w[1:]]] += 1
    vec = np.ones(size, dtype=object)
    e = length - block
    # left-to-right square-and-multiply on the row vector keeps integers exact
    M = A
    while e:
        if e & 1:
            vec = vec.dot(M)
        M = M.dot(M)
        e >>= 1
    return int(sum(vec))


def pattern_count(
    subshift: Subshift, W: Iterable[GroupElement], method: str = "auto", node_cap: int = DEFAULT_NODE_CAP
) -> int:
    """Number of locally admissible patterns on the finite window ``W``.

    ``method`` is ``"backtrack"``, ``"transfer"`` (intervals of ``Z`` only) or
    ``"auto"``, which prefers the transfer matrix when it applies.
    """
    W = frozenset(subshift.group.check(g) for g in W)
    if not W:
        return 1
    if subshift.is_full:
        return subshift.alphabet_size ** len(W)
    interval = _interval(W) if subshift.group.kind == "Z" else None
    if method == "auto":
        method = "transfer" if interval else "backtrack"
    if method == "transfer":
        if interval is None:
            raise UnsupportedError("transfer-matrix counting needs an interval of Z")
        return _transfer_count(subshift, interval[1], node_cap)
    if method == "backtrack":
        return _Search(subshift, W, node_cap).count()
    raise DomainError(f"unknown method {method!r}")


# configurations ----------------------------------------------------------------


class Configuration:
    """A point of ``A^G``; subclasses provide :meth:`symbols`."""

    group: AmenableGroup
    alphabet_size: int

    def symbols(self, elements: Sequence[GroupElement]) -> np.ndarray:
        raise NotImplementedError

    def symbol_at(self, g: GroupElement) -> int:
        return int(self.symbols([g])[0])

    def restrict(self, domain: Iterable[GroupElement]) -> Cylinder:
        support = sorted(frozenset(domain))
        return Cylinder.from_symbols(support, self.symbols(support))


class PeriodicConfiguration(Configuration):
    """``x(g) = pattern[g mod periods]``, coordinatewise.

    In ``H3(Z)`` the periods must agree: reduction modulo ``p`` is then a
    homomorphism onto ``H3(Z/p)`` and the point is genuinely periodic.
    """

    def __init__(self, group: AmenableGroup, pattern, alphabet_size: Optional[int] = None, subshift: Optional[Subshift] = None):
        self.group = group
        self.pattern = np.asarray(pattern, dtype=np.int64)
        if self.pattern.ndim != group.dim:
            raise DomainError(f"pattern must have {group.dim} axes")
        self.periods = self.pattern.shape
        if group.kind == "heisenberg" and len(set(self.periods)) != 1:
            raise DomainError("Heisenberg periods must be equal")
        self.alphabet_size = alphabet_size or max(2, int(self.pattern.max()) + 1)
        if self.pattern.min() < 0 or self.pattern.max() >= self.alphabet_size:
            raise DomainError("pattern symbol outside the alphabet")
        if subshift is not None:
            self._validate(subshift)

    @classmethod
    def from_word(cls, word: Sequence[int], alphabet_size: Optional[int] = None, subshift=None):
        return cls(AmenableGroup.integers(), list(word), alphabet_size, subshift)

    def _validate(self, subshift: Subshift):
        import itertools

        group = self.group
        for idx in itertools.product(*(range(p) for p in self.periods)):
            g = idx[0] if group.kind == "Z" else tuple(idx)
            for p in subshift.forbidden:
                if p.translate(group, g).contains(self):
                    raise DomainError(f"periodic point contains a forbidden pattern at {g!r}")

    def symbols(self, elements):
        if self.group.kind == "Z":
            z = np.asarray(elements, dtype=np.int64).reshape(-1)
            return self.pattern[z % self.periods[0]]
        coords = np.asarray(elements, dtype=np.int64).reshape(-1, self.group.dim)
        idx = tuple((coords[:, i] % p) for i, p in enumerate(self.periods))
        return self.pattern[idx]


class WindowConfiguration(Configuration):
    """A finite partial assignment, extended by a default symbol."""

    def __init__(self, group: AmenableGroup, assignment: Mapping[GroupElement, int], default: int = 0, alphabet_size: int = 2):
        self.group = group
        self.assignment = {group.check(g): int(a) for g, a in assignment.items()}
        self.default = int(default)
        self.alphabet_size = alphabet_size
        if any(not 0 <= a < alphabet_size for a in list(self.assignment.values()) + [self.default]):
            raise DomainError("symbol outside the alphabet")

    def symbols(self, elements):
        get = self.assignment.get
        d = self.default
        return np.fromiter((get(g, d) for g in elements), dtype=np.int64, count=len(elements))


class SampledConfiguration(Configuration):
    """A point drawn from an invariant measure.

    The symbol at ``g`` is a deterministic function of ``(seed, g)``; the
    measure supplies ``sample_symbols(seed, elements, cache)``.
    """

    def __init__(self, measure, seed: int):
        self.measure = measure
        self.seed = int(seed)
        self.group = measure.group
        self.alphabet_size = measure.alphabet_size
        self._cache: dict = {}

    def symbols(self, elements):
        elements = list(elements)
        if not elements:
            return np.zeros(0, dtype=np.int64)
        return self.measure.sample_symbols(self.seed, elements, self._cache)


class TranslatedConfiguration(Configuration):
    """``g.x`` evaluated lazily: ``(g.x)(h) = x(h g)``."""

    def __init__(self, base: Configuration, offset: GroupElement):
        self.base = base
        self.offset = base.group.check(offset)
        self.group = base.group
        self.alphabet_size = base.alphabet_size

    def symbols(self, elements):
        if self.group.kind == "Z":
            z = np.asarray(list(elements), dtype=np.int64) + self.offset
            return self.base.symbols(z.tolist())
        mul = self.group.multiply
        return self.base.symbols([mul(h, self.offset) for h in elements])


def act(g: GroupElement, x: Configuration) -> Configuration:
    g = x.group.check(g)
    if g == x.group.identity:
        return x
    if isinstance(x, TranslatedConfiguration):
        # g.(t.x) = (g t).x
        return TranslatedConfiguration(x.base, x.group.multiply(g, x.offset))
    return TranslatedConfiguration(x, g)


def _same_group(x: Configuration, y: Configuration):
    if x.group != y.group:
        raise GroupMismatchError("configurations live over different groups")


class Distance(NamedTuple):
    value: float
    truncated: bool


def metric_distance(x: Configuration, y: Configuration, depth: int) -> Distance:
    """``2**-i`` for the first disagreement at ``g_i`` with ``i <= depth``.

    Without a disagreement up to ``depth`` the value is ``0`` and ``truncated``
    is set: the true distance is below ``2**-depth``.
    """
    if depth < 1:
        raise DomainError("depth must be positive")
    _same_group(x, y)
    prefix = x.group.enumerate(depth)
    diff = np.nonzero(x.symbols(prefix) != y.symbols(prefix))[0]
    if diff.size:
        return Distance(2.0 ** -(int(diff[0]) + 1), False)
    return Distance(0.0, True)


def bowen_distance(x: Configuration, y: Configuration, F: Iterable[GroupElement], depth: int) -> Distance:
    """``max_{g in F} d(g.x, g.y)`` at the given depth."""
    worst = Distance(0.0, True)
    for g in F:
        d = metric_distance(act(g, x), act(g, y), depth)
        if d.value > worst.value:
            worst = d
    return worst


def bowen_domain(group: AmenableGroup, F: Iterable[GroupElement], epsilon: float) -> frozenset:
    """Coordinates fixed by ``B_F(x, eps)``: ``{g_i g : i <= m(eps), g in F}``."""
    m = dyadic_depth(epsilon)
    if m == 0:
        return frozenset()
    prefix = group.enumerate(m)
    F = list(F)
    if group.kind == "Z":
        return frozenset(int(a) + int(b) for a in prefix for b in F)
    return group.product_set(prefix, F)


@dataclass(frozen=True)
class BowenBall:
    center: Configuration = field(compare=False)
    F: frozenset
    epsilon: float
    domain: frozenset
    cylinder: Cylinder

    def contains(self, y: Configuration) -> bool:
        return self.cylinder.contains(y)


def bowen_ball(x: Configuration, F: Iterable[GroupElement], epsilon: float) -> BowenBall:
    F = frozenset(F)
    domain = bowen_domain(x.group, F, epsilon)
    return BowenBall(x, F, epsilon, domain, x.restrict(domain))
