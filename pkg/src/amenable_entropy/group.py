"""Finitely generated amenable groups, box Følner sequences and their diagnostics.

Elements are plain Python values in canonical form: an ``int`` for the
integers, a ``d``-tuple of ints for ``Z^d`` and a triple ``(a, b, c)`` for the
discrete Heisenberg group, standing for the upper-triangular matrix
``[[1, a, c], [0, 1, b], [0, 0, 1]]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, GroupMismatchError, ResourceLimitError

GroupElement = Union[int, Tuple[int, ...]]

DEFAULT_UNION_CAP = 10**8


@dataclass(frozen=True)
class AmenableGroup:
    """One of ``Z``, ``Z^d`` (``d <= 3``) or the Heisenberg group ``H3(Z)``."""

    kind: str
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("Z", "Zd", "heisenberg"):
            raise DomainError(f"unknown group kind {self.kind!r}")
        if self.kind == "Z" and self.dim != 1:
            raise DomainError("Z has dimension 1")
        if self.kind == "Zd" and not 1 <= self.dim <= 3:
            raise DomainError("Z^d is implemented for 1 <= d <= 3")
        if self.kind == "heisenberg" and self.dim != 3:
            raise DomainError("the Heisenberg group has three coordinates")

    # construction ---------------------------------------------------------

    @classmethod
    def integers(cls) -> "AmenableGroup":
        return cls("Z", 1)

    @classmethod
    def lattice(cls, d: int) -> "AmenableGroup":
        if d == 1:
            return cls.integers()
        return cls("Zd", d)

    @classmethod
    def heisenberg(cls) -> "AmenableGroup":
        return cls("heisenberg", 3)

    @classmethod
    def by_name(cls, name: str) -> "AmenableGroup":
        """Parse the config names ``Z``, ``Z2``, ``Z3`` and ``heisenberg``."""
        if name == "Z":
            return cls.integers()
        if name in ("Z2", "Z3"):
            return cls.lattice(int(name[1]))
        if name == "heisenberg":
            return cls.heisenberg()
        raise DomainError(f"unknown group name {name!r}")

    @property
    def name(self) -> str:
        if self.kind == "Z":
            return "Z"
        if self.kind == "Zd":
            return f"Z{self.dim}"
        return "heisenberg"

    @property
    def is_abelian(self) -> bool:
        return self.kind != "heisenberg"

    # group law ------------------------------------------------------------

    @property
    def identity(self) -> GroupElement:
        if self.kind == "Z":
            return 0
        return (0,) * self.dim

    @property
    def generators(self) -> Tuple[GroupElement, ...]:
        if self.kind == "Z":
            return (1,)
        if self.kind == "Zd":
            return tuple(
                tuple(1 if i == j else 0 for j in range(self.dim)) for i in range(self.dim)
            )
        return ((1, 0, 0), (0, 1, 0))

    def check(self, g) -> GroupElement:
        """Return ``g`` unchanged if it is a canonical element of this group."""
        if self.kind == "Z":
            if isinstance(g, (int, np.integer)) and not isinstance(g, bool):
                return int(g)
        elif (
            isinstance(g, tuple)
            and len(g) == self.dim
            and all(isinstance(c, (int, np.integer)) and not isinstance(c, bool) for c in g)
        ):
            return g
        raise GroupMismatchError(f"{g!r} is not an element of {self.name}")

    def multiply(self, g: GroupElement, h: GroupElement) -> GroupElement:
        g = self.check(g)
        h = self.check(h)
        if self.kind == "Z":
            return g + h
        if self.kind == "Zd":
            return tuple(a + b for a, b in zip(g, h))
        a, b, c = g
        a2, b2, c2 = h
        return (a + a2, b + b2, c + c2 + a * b2)

    def inverse(self, g: GroupElement) -> GroupElement:
        g = self.check(g)
        if self.kind == "Z":
            return -g
        if self.kind == "Zd":
            return tuple(-a for a in g)
        a, b, c = g
        return (-a, -b, -c + a * b)

    def product_set(self, A: Iterable[GroupElement], B: Iterable[GroupElement]) -> frozenset:
        """The set ``AB = {ab : a in A, b in B}``."""
        B = list(B)
        return frozenset(self.multiply(a, b) for a in A for b in B)

    # canonical enumeration ------------------------------------------------

    def enumerate(self, m: int) -> Tuple[GroupElement, ...]:
        """First ``m`` elements of the canonical enumeration (``g_1`` is the identity)."""
        if m < 1:
            raise DomainError("m must be positive")
        return _enumeration_prefix(self, m)

    def index_of(self, g: GroupElement) -> int:
        """Zero-based position of ``g`` in the canonical enumeration."""
        g = self.check(g)
        if self.kind == "Z":
            return 2 * g - 1 if g > 0 else -2 * g
        return _shell_index(g)

    def index_array(self, elements: Sequence[GroupElement]) -> np.ndarray:
        """Vectorised :meth:`index_of`; fast for ``Z``."""
        if self.kind == "Z":
            z = np.asarray(elements, dtype=np.int64)
            return np.where(z > 0, 2 * z - 1, -2 * z).astype(np.uint64)
        return np.fromiter((self.index_of(g) for g in elements), dtype=np.uint64, count=len(elements))

    def sort_key(self, g: GroupElement):
        return g


def _shell(d: int, r: int):
    if r == 0:
        yield (0,) * d
        return
    for t in itertools.product(range(-r, r + 1), repeat=d):
        if max(abs(c) for c in t) == r:
            yield t


@lru_cache(maxsize=64)
def _enumeration_prefix(group: AmenableGroup, m: int) -> Tuple[GroupElement, ...]:
    if group.kind == "Z":
        out = [0]
        k = 1
        while len(out) < m:
            out.extend((k, -k))
            k += 1
        return tuple(out[:m])
    out = []
    r = 0
    while len(out) < m:
        out.extend(_shell(group.dim, r))
        r += 1
    return tuple(out[:m])


def _shell_index(g: Tuple[int, ...]) -> int:
    # elements ordered by (max-norm, lexicographic)
    d = len(g)
    r = max(abs(c) for c in g)
    if r == 0:
        return 0
    index = (2 * r - 1) ** d
    hit = False
    for i, gi in enumerate(g):
        rest = d - i - 1
        full = (2 * r + 1) ** rest
        inner = (2 * r - 1) ** rest
        smaller = gi + r  # values -r .. gi-1
        if smaller > 0:
            if hit:
                index += smaller * full
            else:
                # v = -r reaches the shell; the other values leave it to the suffix
                index += full + (smaller - 1) * (full - inner)
        hit = hit or abs(gi) == r
    return index


# Følner sequences -----------------------------------------------------------


@dataclass(frozen=True)
class FolnerSequence:
    """Box Følner sets, optionally right-translated by ``offset(n)``."""

    group: AmenableGroup
    family: str = "boxes"
    offset: Optional[Callable[[int], GroupElement]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in ("boxes", "shifted_boxes"):
            raise DomainError(f"unknown Følner family {self.family!r}")
        if (self.family == "shifted_boxes") != (self.offset is not None):
            raise DomainError("shifted_boxes needs an offset rule and boxes must not have one")

    @classmethod
    def boxes(cls, group: AmenableGroup) -> "FolnerSequence":
        return cls(group, "boxes")

    @classmethod
    def shifted_boxes(cls, group: AmenableGroup, offset: Callable[[int], GroupElement]) -> "FolnerSequence":
        return cls(group, "shifted_boxes", offset)

    def size(self, n: int) -> int:
        _check_order(n)
        if self.group.kind == "heisenberg":
            return n**4
        return n**self.group.dim

    def box_elements(self, n: int) -> Tuple[GroupElement, ...]:
        _check_order(n)
        return _box(self.group, n)

    def elements(self, n: int) -> Tuple[GroupElement, ...]:
        """``F_n`` as a tuple in sorted order."""
        box = self.box_elements(n)
        if self.offset is None:
            return box
        t = self.group.check(self.offset(n))
        return tuple(sorted(self.group.multiply(g, t) for g in box))

    def set_of(self, n: int) -> frozenset:
        return frozenset(self.elements(n))

    def is_nested(self) -> bool:
        return self.family == "boxes"


def _check_order(n: int):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"Følner index must be a positive integer, got {n!r}")


@lru_cache(maxsize=256)
def _box(group: AmenableGroup, n: int) -> Tuple[GroupElement, ...]:
    if group.kind == "Z":
        return tuple(range(n))
    if group.kind == "Zd":
        return tuple(itertools.product(range(n), repeat=group.dim))
    return tuple((a, b, c) for a in range(n) for b in range(n) for c in range(n * n))


def folner_set(seq: FolnerSequence, n: int) -> frozenset:
    return seq.set_of(n)


def folner_defect(seq: FolnerSequence, n: int, g: GroupElement) -> float:
    """``|F_n Δ gF_n| / |F_n|`` computed on materialised sets."""
    F = seq.set_of(n)
    gF = frozenset(seq.group.multiply(g, f) for f in F)
    return len(F ^ gF) / len(F)


# temperedness and growth ---------------------------------------------------


@dataclass(frozen=True)
class TemperednessReport:
    """Ratios ``|U_{k<n} F_k^{-1} F_n| / |F_n|`` for ``n = 2..N``.

    ``witnessed_C`` is the maximum over the computed range only; it is a lower
    bound for any constant that works for every ``n``.
    """

    N: int
    union_sizes: Tuple[int, ...]
    folner_sizes: Tuple[int, ...]

    @property
    def ns(self) -> range:
        return range(2, self.N + 1)

    @property
    def ratios(self) -> Tuple[float, ...]:
        return tuple(u / f for u, f in zip(self.union_sizes, self.folner_sizes))

    def ratio(self, n: int) -> float:
        return self.union_sizes[n - 2] / self.folner_sizes[n - 2]

    @property
    def witnessed_C(self) -> float:
        return max(self.ratios)

    def rows(self):
        return [(n, r) for n, r in zip(self.ns, self.ratios)]


def temperedness_report(
    seq: FolnerSequence, N: int, cap: int = DEFAULT_UNION_CAP, method: str = "auto"
) -> TemperednessReport:
    """Exact temperedness ratios for ``2 <= n <= N``.

    ``method="sets"`` materialises ``(U_{k<n} F_k)^{-1} F_n`` as a Python set.
    ``method="axes"`` (nested ``Z^d`` boxes only) uses that the union is then
    ``F_{n-1}^{-1} F_n``, a product set whose axis factors are materialised as
    supports of indicator convolutions.
    """
    if N < 2:
        raise DomainError("N must be at least 2")
    group = seq.group
    axes_ok = group.is_abelian and seq.is_nested()
    if method == "auto":
        method = "axes" if axes_ok else "sets"
    if method == "axes" and not axes_ok:
        raise DomainError("axis decomposition needs nested boxes in an abelian group")
    if method not in ("axes", "sets"):
        raise DomainError(f"unknown method {method!r}")

    unions, sizes = [], []
    if method == "axes":
        for n in range(2, N + 1):
            # every axis: F_{n-1} = [0, n-2] reflected against F_n = [0, n-1]
            axis = np.convolve(np.ones(n, dtype=np.int64), np.ones(n - 1, dtype=np.int64))
            width = int(np.count_nonzero(axis))
            total = width**group.dim
            if total > cap:
                raise ResourceLimitError(
                    f"temperedness union at n={n} has {total} elements", attempted=total, cap=cap
                )
            unions.append(total)
            sizes.append(seq.size(n))
        return TemperednessReport(N, tuple(unions), tuple(sizes))

    prefix = set(seq.elements(1))
    for n in range(2, N + 1):
        F = seq.elements(n)
        work = len(prefix) * len(F)
        if work > cap:
            raise ResourceLimitError(
                f"temperedness union at n={n} needs {work} products", attempted=work, cap=cap
            )
        if group.kind == "Z":
            # same set, built as an indicator array over its integer range
            inv = -np.fromiter(prefix, dtype=np.int64, count=len(prefix))
            f = np.asarray(F, dtype=np.int64)
            lo = int(inv.min() + f.min())
            seen = np.zeros(int(inv.max() + f.max()) - lo + 1, dtype=bool)
            seen[np.add.outer(inv - lo, f).ravel()] = True
            unions.append(int(np.count_nonzero(seen)))
        else:
            inv = [group.inverse(u) for u in prefix]
            unions.append(len(group.product_set(inv, F)))
        sizes.append(len(F))
        prefix.update(F)
    return TemperednessReport(N, tuple(unions), tuple(sizes))


@dataclass(frozen=True)
class GrowthReport:
    rows: Tuple[Tuple[int, float], ...]

    @property
    def increasing(self) -> bool:
        """True when the ratio strictly increases at every step of the range."""
        vals = [v for _, v in self.rows]
        return all(b > a for a, b in zip(vals, vals[1:]))


def growth_report(seq: FolnerSequence, n_lo: int, n_hi: int) -> GrowthReport:
    """``|F_n| / ln n`` on ``[n_lo, n_hi]``."""
    if n_lo < 2:
        raise DomainError("n_lo must be at least 2 (ln 1 = 0)")
    if n_hi < n_lo:
        raise DomainError("empty range")
    return GrowthReport(tuple((n, seq.size(n) / math.log(n)) for n in range(n_lo, n_hi + 1)))


# boundaries ------------------------------------------------------------------


def _nonempty(group, A, K):
    A = frozenset(group.check(a) for a in A)
    K = frozenset(group.check(k) for k in K)
    if not A or not K:
        raise DomainError("A and K must be nonempty")
    return A, K


def k_boundary(group: AmenableGroup, A: Iterable[GroupElement], K: Iterable[GroupElement]) -> frozenset:
    """``B(A, K) = {g : Kg meets both A and its complement}``."""
    A, K = _nonempty(group, A, K)
    # Kg ∩ A ≠ ∅ forces g ∈ K^{-1}A
    candidates = group.product_set([group.inverse(k) for k in K], A)
    out = []
    for g in candidates:
        hits = [group.multiply(k, g) in A for k in K]
        if any(hits) and not all(hits):
            out.append(g)
    return frozenset(out)


def invariance_defect(group: AmenableGroup, A, K) -> float:
    A, K = _nonempty(group, A, K)
    return len(k_boundary(group, A, K)) / len(A)


def is_invariant(group: AmenableGroup, A, K, delta: float) -> bool:
    """Whether ``A`` is ``(K, delta)``-invariant."""
    return invariance_defect(group, A, K) < delta
