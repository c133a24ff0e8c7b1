"""Empirical measures, generic-point diagnostics and the counting bounds.

Frequencies are kept as integer counts over ``F_n`` so that comparisons
against a tolerance are exact.  The test family at depth ``L`` is every
cylinder whose support is a nonempty subset of ``{g_1, ..., g_L}`` (the
first ``L`` elements of the canonical enumeration).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, ResourceLimitError, UnsupportedError
from .group import AmenableGroup, FolnerSequence, GroupElement
from .measure import Bernoulli, InvariantMeasure, Partition, atom_of
from .shift import (
    Configuration,
    Cylinder,
    Subshift,
    admissible_words,
    bowen_ball,
    bowen_domain,
    dyadic_depth,
)

MAX_DEPTH = 4
ENUMERATION_MAX_N = 24
ENUMERATION_MAX_SITES = 28
_CHUNK = 1 << 18


def default_depth(m: int) -> int:
    """``L(m) = min(m, 4)``."""
    return min(m, MAX_DEPTH)


def _as_fraction(v) -> Fraction:
    # decimal literals such as 0.3 are meant exactly, not as their binary float
    return v if isinstance(v, Fraction) else Fraction(str(v))


def exact_mass(mu: InvariantMeasure, c: Cylinder) -> Fraction:
    """``mu(c)`` as a rational: exact for Bernoulli, the float value otherwise."""
    if isinstance(mu, Bernoulli):
        p = [_as_fraction(v) for v in mu.p]
        out = Fraction(1)
        for _, a in c.items:
            out *= p[a]
        return out
    return Fraction(math.exp(mu.log_cylinder_mass(c)))


# test family -------------------------------------------------------------------


@dataclass(frozen=True)
class _Family:
    """Cylinders on subsets of the first ``L`` elements, with projections.

    A depth-``L`` code is ``sum_j a_j k**j`` for the symbols ``a_j`` at
    ``g_j``.  ``projection`` maps code counts to counts of each test cylinder.
    """

    prefix: Tuple[GroupElement, ...]
    k: int
    cylinders: Tuple[Cylinder, ...]
    projection: np.ndarray  # (k**L, len(cylinders)) of 0/1

    @staticmethod
    @lru_cache(maxsize=64)
    def build(group: AmenableGroup, L: int, k: int) -> "_Family":
        prefix = group.enumerate(L)
        codes = np.arange(k**L)
        digits = (codes[:, None] // k ** np.arange(L)) % k
        cylinders, cols = [], []
        for r in range(1, L + 1):
            for subset in itertools.combinations(range(L), r):
                for pattern in itertools.product(range(k), repeat=r):
                    cylinders.append(Cylinder.from_symbols([prefix[j] for j in subset], pattern))
                    cols.append(np.all(digits[:, list(subset)] == pattern, axis=1))
        return _Family(prefix, k, tuple(cylinders), np.stack(cols, axis=1).astype(np.int64))


def _allowed(family: _Family, mu: InvariantMeasure, n: int, tolerance: Fraction) -> np.ndarray:
    """``ok[c, j]``: a count ``j`` of cylinder ``c`` out of ``n`` is within tolerance."""
    ok = np.zeros((len(family.cylinders), n + 1), dtype=bool)
    for i, c in enumerate(family.cylinders):
        target = exact_mass(mu, c)
        lo = math.ceil((target - tolerance) * n)
        hi = math.floor((target + tolerance) * n)
        ok[i, max(lo, 0) : max(min(hi, n) + 1, 0)] = True
    return ok


def _codes(symbols: np.ndarray, positions: np.ndarray, k: int) -> np.ndarray:
    """Depth-``L`` codes; ``symbols`` is (words, sites), ``positions`` is (L, n)."""
    out = np.zeros((symbols.shape[0], positions.shape[1]), dtype=np.int64)
    for j in range(positions.shape[0]):
        out += symbols[:, positions[j]] * k**j
    return out


def _code_counts(codes: np.ndarray, k: int, L: int) -> np.ndarray:
    if codes.shape[0] == 1:
        return np.bincount(codes[0], minlength=k**L)[None, :]
    return np.stack([(codes == c).sum(axis=1) for c in range(k**L)], axis=1)


def _translates(group: AmenableGroup, prefix, F) -> List[List[GroupElement]]:
    """``rows[j][i] = g_j . F[i]`` (the site read by cylinder coordinate ``g_j``)."""
    if group.kind == "Z":
        base = np.asarray(F, dtype=np.int64)
        return [(base + h).tolist() for h in prefix]
    return [[group.multiply(h, g) for g in F] for h in prefix]


# empirical measures --------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalMeasure:
    """``(1/|F|) sum_{g in F} delta_{g.x}`` seen through the depth-``L`` family."""

    x: Configuration = field(compare=False, repr=False)
    F: Tuple[GroupElement, ...] = field(repr=False)
    depth: int
    code_counts: np.ndarray = field(compare=False, repr=False)

    @property
    def size(self) -> int:
        return len(self.F)

    @property
    def family(self) -> _Family:
        return _Family.build(self.x.group, self.depth, self.x.alphabet_size)

    def counts(self) -> np.ndarray:
        """Occurrences of each test cylinder, in family order."""
        return self.code_counts @ self.family.projection

    def frequency(self, c: Cylinder) -> Fraction:
        fam = self.family
        pos = {g: j for j, g in enumerate(fam.prefix)}
        if not c.support <= set(pos):
            raise DomainError(f"cylinder support must lie in the first {self.depth} elements")
        codes = np.arange(fam.k**self.depth)
        hit = np.ones(codes.size, dtype=bool)
        for g, a in c.items:
            hit &= (codes // fam.k ** pos[g]) % fam.k == a
        return Fraction(int(self.code_counts[hit].sum()), self.size)

    def frequencies(self) -> Dict[Cylinder, Fraction]:
        return {c: Fraction(int(v), self.size) for c, v in zip(self.family.cylinders, self.counts())}


def empirical_measure(x: Configuration, F: Sequence[GroupElement], L: int) -> EmpiricalMeasure:
    if L < 1:
        raise DomainError("depth L must be at least 1")
    F = tuple(sorted(frozenset(x.group.check(g) for g in F)))
    if not F:
        raise DomainError("F must be nonempty")
    rows = _translates(x.group, x.group.enumerate(L), F)
    flat = [g for row in rows for g in row]
    sym = np.asarray(x.symbols(flat), dtype=np.int64).reshape(1, -1)
    positions = np.arange(len(flat)).reshape(L, len(F))
    counts = _code_counts(_codes(sym, positions, x.alphabet_size), x.alphabet_size, L)[0]
    return EmpiricalMeasure(x, F, L, counts)


def weak_star_distance(emp: EmpiricalMeasure, mu: InvariantMeasure) -> float:
    """Largest ``|freq(c) - mu(c)|`` over the test family."""
    if emp.x.alphabet_size != mu.alphabet_size:
        raise DomainError("empirical measure and mu use different alphabets")
    worst = Fraction(0)
    for c, v in zip(emp.family.cylinders, emp.counts()):
        worst = max(worst, abs(Fraction(int(v), emp.size) - exact_mass(mu, c)))
    return float(worst)


@dataclass(frozen=True)
class NeighborhoodSpec:
    """``K_m``: every depth-``L(m)`` test frequency within ``1/m`` of ``mu``."""

    m: int
    depth: Optional[int] = None

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("m must be a positive integer")
        if self.depth is None:
            object.__setattr__(self, "depth", default_depth(self.m))
        elif self.depth < 1:
            raise DomainError("depth must be at least 1")

    @property
    def tolerance(self) -> Fraction:
        return Fraction(1, self.m)

    def is_within(self, other: "NeighborhoodSpec") -> bool:
        """Structural ``K_self <= K_other``: more constraints, each at least as tight."""
        return self.depth >= other.depth and self.tolerance <= other.tolerance

    def contains(self, emp: EmpiricalMeasure, mu: InvariantMeasure) -> bool:
        if emp.depth < self.depth:
            raise DomainError("empirical measure is shallower than the neighbourhood")
        if emp.depth > self.depth:
            emp = empirical_measure(emp.x, emp.F, self.depth)
        ok = _allowed(emp.family, mu, emp.size, self.tolerance)
        counts = emp.counts()
        return bool(ok[np.arange(len(counts)), counts].all())


def in_A_nm(
    x: Configuration, mu: InvariantMeasure, seq: FolnerSequence, n: int, m: int, L: Optional[int] = None
) -> bool:
    """Whether the empirical measure of ``x`` along ``F_n`` lies in ``K_m``."""
    spec = NeighborhoodSpec(m, L)
    return spec.contains(empirical_measure(x, seq.elements(n), spec.depth), mu)


# counting A_{n,m} --------------------------------------------------------------


@dataclass(frozen=True)
class WordCount:
    count: int
    rate: float
    method: str

    def __iter__(self):
        return iter((self.count, self.rate))


def _rate(count: int, n: int) -> float:
    return math.log(count) / n if count > 0 else -math.inf


def _binomial_count(n: int, p1: Fraction, tolerance: Fraction) -> int:
    lo = max(math.ceil((p1 - tolerance) * n), 0)
    hi = min(math.floor((p1 + tolerance) * n), n)
    return sum(math.comb(n, j) for j in range(lo, hi + 1))


def _word_blocks(S: Subshift, sites: Sequence[GroupElement]):
    """Admissible words on ``sites`` (in that order) as int8 blocks."""
    k = S.alphabet_size
    if S.is_full:
        total = k ** len(sites)
        place = k ** np.arange(len(sites), dtype=np.int64)
        for start in range(0, total, _CHUNK):
            ints = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
            yield ((ints[:, None] // place) % k).astype(np.int8)
        return
    order, it = admissible_words(S, sites)
    perm = [order.index(g) for g in sites]
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.asarray(block, dtype=np.int8)[:, perm]


def count_A_nm_words(
    S: Subshift,
    mu: InvariantMeasure,
    n: int,
    m: Optional[int] = None,
    tolerance=None,
    epsilon: float = 0.5,
    L: Optional[int] = None,
    method: str = "auto",
) -> WordCount:
    """``N(A_{n,m}, n, eps)`` over ``Z`` with boxes ``F_n = {0, ..., n-1}``.

    Points of ``A_{n,m}`` are grouped by their symbols on the Bowen domain of
    ``F_n``; distinct groups are exactly the members of a largest
    ``(F_n, eps)``-separated subset.  For the binary full shift, a Bernoulli
    measure, depth 1 and ``eps`` in ``(1/4, 1/2]`` the groups are the words
    with an admissible number of ones (``method="binomial"``).  Otherwise the
    admissible patterns on the union of the Bowen domain and the sites read by
    the test family are enumerated (``method="enumerate"``, ``n <= 24``).
    The depth ``L`` defaults to 1 here, whatever ``m``.
    """
    group = S.group
    if group.kind != "Z":
        raise UnsupportedError("A_{n,m} counting is implemented over Z only")
    if mu.group != group or mu.alphabet_size != S.alphabet_size:
        raise DomainError("mu must live on the subshift's group and alphabet")
    if n < 1:
        raise DomainError("n must be positive")
    if (m is None) == (tolerance is None):
        raise DomainError("give exactly one of m and tolerance")
    tol = Fraction(1, m) if tolerance is None else _as_fraction(tolerance)
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    # depth 1 unless asked: the type-class count concerns single-site frequencies
    depth = 1 if L is None else L
    if depth < 1:
        raise DomainError("depth must be at least 1")

    oracle = (
        S.is_full and S.alphabet_size == 2 and isinstance(mu, Bernoulli) and depth == 1 and dyadic_depth(epsilon) == 1
    )
    if method == "auto":
        method = "binomial" if oracle else "enumerate"
    if method == "binomial":
        if not oracle:
            raise UnsupportedError("the binomial oracle needs the binary full shift, Bernoulli, L=1, eps in (1/4, 1/2]")
        count = _binomial_count(n, _as_fraction(mu.p[1]), tol)
        return WordCount(count, _rate(count, n), "binomial")
    if method != "enumerate":
        raise DomainError(f"unknown method {method!r}")
    if n > ENUMERATION_MAX_N:
        raise UnsupportedError(f"enumeration is limited to n <= {ENUMERATION_MAX_N}")

    F = list(range(n))
    rows = _translates(group, group.enumerate(depth), F)
    domain = bowen_domain(group, F, epsilon)
    sites = sorted(set(domain).union(*map(set, rows)))
    if len(sites) > ENUMERATION_MAX_SITES:
        raise ResourceLimitError(
            f"enumeration window has {len(sites)} sites", attempted=len(sites), cap=ENUMERATION_MAX_SITES
        )
    index = {g: i for i, g in enumerate(sites)}
    positions = np.asarray([[index[g] for g in row] for row in rows], dtype=np.int64)
    dom = np.asarray(sorted(index[g] for g in domain), dtype=np.int64)
    k = S.alphabet_size
    family = _Family.build(group, depth, k)
    ok = _allowed(family, mu, n, tol)
    cols = np.arange(len(family.cylinders))
    place = k ** np.arange(dom.size, dtype=np.int64)
    classes = set()
    for block in _word_blocks(S, sites):
        block = block.astype(np.int64)
        counts = _code_counts(_codes(block, positions, k), k, depth) @ family.projection
        member = ok[cols, counts].all(axis=1)
        if member.any():
            classes.update(np.unique(block[member][:, dom] @ place).tolist())
    count = len(classes)
    return WordCount(count, _rate(count, n), "enumerate")


# entropy trajectories ------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Samples ``(n, value)`` of an entropy-like quantity along the sequence."""

    samples: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        ns = [n for n, _ in self.samples]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise DomainError("trajectory orders must be strictly increasing")

    @property
    def ns(self) -> np.ndarray:
        return np.asarray([n for n, _ in self.samples], dtype=np.int64)

    @property
    def values(self) -> np.ndarray:
        return np.asarray([v for _, v in self.samples], dtype=float)

    def running_mean(self) -> np.ndarray:
        v = self.values
        return np.cumsum(v) / np.arange(1, v.size + 1)

    def oscillation(self, window: int = 3) -> float:
        """Spread ``max - min`` over the last ``window`` samples."""
        tail = self.values[-window:]
        return float(tail.max() - tail.min()) if tail.size else 0.0

    @property
    def last(self) -> float:
        return float(self.values[-1])


def _neg_log_rate(log_mass: float, size: int) -> float:
    if log_mass == -math.inf:
        return math.inf
    return 0.0 - log_mass / size


def smb_value(
    x: Configuration, mu: InvariantMeasure, seq: FolnerSequence, n: int, P: Optional[Partition] = None
) -> float:
    """``-(1/|F_n|) ln mu(P^{F_n}(x))``; ``+inf`` when the atom is null."""
    P = P if P is not None else Partition.zero(mu.group, mu.alphabet_size)
    F = seq.elements(n)
    return _neg_log_rate(mu.log_cylinder_mass(atom_of(mu.group, P, x, F)), len(F))


def smb_trajectory(
    x: Configuration, mu: InvariantMeasure, seq: FolnerSequence, schedule: Sequence[int], P: Optional[Partition] = None
) -> Trajectory:
    return Trajectory(tuple((int(n), smb_value(x, mu, seq, n, P)) for n in schedule))


def brin_katok_value(x: Configuration, mu: InvariantMeasure, delta: float, seq: FolnerSequence, n: int) -> float:
    """``-(1/|F_n|) ln mu(B_{F_n}(x, delta))``; ``+inf`` when the ball is null."""
    F = seq.elements(n)
    ball = bowen_ball(x, F, delta)
    return _neg_log_rate(mu.log_cylinder_mass(ball.cylinder), len(F))


def brin_katok_trajectory(
    x: Configuration, mu: InvariantMeasure, delta: float, seq: FolnerSequence, schedule: Sequence[int]
) -> Trajectory:
    return Trajectory(tuple((int(n), brin_katok_value(x, mu, delta, seq, n)) for n in schedule))


# Hamming-ball count ----------------------------------------------------------


@dataclass(frozen=True)
class StirlingBound:
    n: int
    q: float
    a: int
    exact_count: int
    K: float
    log_bound: float
    bound: float
    holds: bool


def stirling_constant(q: float, a: int) -> float:
    """``K = q + q ln(a-1) - q ln q - (1-q) ln(1-q)``."""
    return q + q * math.log(a - 1) - q * math.log(q) - (1 - q) * math.log1p(-q)


def stirling_bound(n: int, q: float, a: int) -> StirlingBound:
    """Words of length ``n`` within Hamming distance ``qn`` of a fixed word vs ``exp(Kn)``."""
    if not 0 < q < 1:
        raise DomainError("q must lie in (0, 1)")
    if a < 2:
        raise DomainError("alphabet size a must be at least 2")
    if n < 0:
        raise DomainError("n must be nonnegative")
    top = math.floor(_as_fraction(q) * n)
    exact = sum(math.comb(n, j) * (a - 1) ** j for j in range(top + 1))
    K = stirling_constant(q, a)
    log_bound = K * n
    try:
        bound = math.exp(log_bound)
    except OverflowError:
        bound = math.inf
    return StirlingBound(n, q, a, exact, K, log_bound, bound, math.log(exact) <= log_bound)


# certificates --------------------------------------------------------------------


@dataclass(frozen=True)
class CertificateRow:
    m: int
    depth: int
    threshold: Optional[int]
    flags: Tuple[bool, ...]


@dataclass(frozen=True)
class GenericCertificate:
    """Per ``m``, the least scheduled ``n`` after which ``x`` stays in ``A_{n,m}``.

    This is finite-scale evidence only; an absent threshold means the last
    scheduled order already fails.
    """

    schedule: Tuple[int, ...]
    rows: Tuple[CertificateRow, ...]

    def threshold(self, m: int) -> Optional[int]:
        return next(r.threshold for r in self.rows if r.m == m)


def generic_point_certificate(
    x: Configuration,
    mu: InvariantMeasure,
    seq: FolnerSequence,
    m_max: int,
    n_schedule: Sequence[int],
    L: Optional[int] = None,
) -> GenericCertificate:
    schedule = tuple(sorted(set(int(n) for n in n_schedule)))
    if not schedule:
        raise DomainError("empty n schedule")
    rows = []
    for m in range(1, m_max + 1):
        spec = NeighborhoodSpec(m, L)
        flags = tuple(spec.contains(empirical_measure(x, seq.elements(n), spec.depth), mu) for n in schedule)
        threshold = None
        for i in range(len(schedule) - 1, -1, -1):
            if not flags[i]:
                break
            threshold = schedule[i]
        rows.append(CertificateRow(m, spec.depth, threshold, flags))
    return GenericCertificate(schedule, tuple(rows))
