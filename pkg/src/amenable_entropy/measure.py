"""Ergodic invariant measures on full shifts: Bernoulli laws and Markov chains over Z.

Masses are computed in log space (``log_cylinder_mass``) because the
cylinders of interest fix thousands of coordinates.  Entropies are in nats.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, ResourceLimitError, UnsupportedError
from .group import AmenableGroup, GroupElement
from .shift import Configuration, Cylinder, SampledConfiguration

DEFAULT_SEED = 20130601
DEFAULT_ATOM_CAP = 10**6

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, index: np.ndarray) -> np.ndarray:
    """Counter-based uniforms on [0, 1): a fixed hash of ``(seed, index)``."""
    key = _splitmix(np.array([seed & _MASK64], dtype=np.uint64) + _GOLDEN)
    z = _splitmix(_splitmix(np.asarray(index, dtype=np.uint64) ^ key) + _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def shannon(p) -> float:
    return float(-_xlogx(p).sum())


def _symbols_of(c: Cylinder, k: int) -> np.ndarray:
    a = np.fromiter((s for _, s in c.items), dtype=np.int64, count=len(c.items))
    if a.size and (a.min() < 0 or a.max() >= k):
        raise DomainError("cylinder symbol outside the alphabet")
    return a


class InvariantMeasure:
    group: AmenableGroup
    alphabet_size: int

    def log_cylinder_mass(self, c: Cylinder) -> float:
        raise NotImplementedError

    def entropy(self) -> float:
        raise NotImplementedError

    def sample_symbols(self, seed: int, elements: Sequence[GroupElement], cache: dict) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Bernoulli(InvariantMeasure):
    """Independent coordinates with law ``p`` over any implemented group."""

    p: Tuple[float, ...]
    group: AmenableGroup = AmenableGroup.integers()

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise DomainError("a Bernoulli law needs a probability vector of length >= 2")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("probability vector must be nonnegative and sum to 1")
        object.__setattr__(self, "p", tuple(float(v) for v in p))
        object.__setattr__(self, "_logp", np.log(np.where(p > 0, p, 1.0)))
        object.__setattr__(self, "_cum", np.cumsum(p))

    @property
    def alphabet_size(self) -> int:
        return len(self.p)

    def log_cylinder_mass(self, c: Cylinder) -> float:
        a = _symbols_of(c, self.alphabet_size)
        counts = np.bincount(a, minlength=self.alphabet_size)
        p = np.asarray(self.p)
        if ((counts > 0) & (p == 0)).any():
            return -math.inf
        # counts per symbol: exact under any reordering of the support
        return float(np.dot(counts, self._logp))

    def entropy(self) -> float:
        return shannon(self.p)

    def sample_symbols(self, seed, elements, cache):
        u = uniforms(seed, self.group.index_array(elements))
        s = np.searchsorted(self._cum, u, side="right")
        return np.minimum(s, self.alphabet_size - 1).astype(np.int64)


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Solve ``pi P = pi``, ``sum(pi) = 1`` by least squares."""
    k = P.shape[0]
    A = np.vstack([P.T - np.eye(k), np.ones((1, k))])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _is_primitive(P: np.ndarray) -> bool:
    k = P.shape[0]
    M = (P > 0).astype(np.int64)
    R = M.copy()
    for _ in range((k - 1) ** 2 + 1):
        if (R > 0).all():
            return True
        R = ((R @ M) > 0).astype(np.int64)
    return bool((R > 0).all())


@dataclass(frozen=True, eq=False)
class Markov(InvariantMeasure):
    """Stationary Markov chain over ``Z`` with a primitive transition matrix."""

    P: Tuple[Tuple[float, ...], ...]
    pi: Optional[Tuple[float, ...]] = None

    group = AmenableGroup.integers()

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
            raise DomainError("transition matrix must be square with at least two states")
        if (P < 0).any() or np.abs(P.sum(axis=1) - 1.0).max() > 1e-12:
            raise DomainError("transition matrix must be row-stochastic")
        if not _is_primitive(P):
            raise DomainError("transition matrix must be irreducible and aperiodic")
        pi = stationary_distribution(P) if self.pi is None else np.asarray(self.pi, dtype=float)
        if pi.shape != (P.shape[0],) or (pi < 0).any() or abs(pi.sum() - 1.0) > 1e-12:
            raise DomainError("stationary vector must be a probability vector")
        if np.abs(pi @ P - pi).max() > 1e-10:
            raise DomainError("pi is not stationary for P")
        object.__setattr__(self, "P", tuple(tuple(float(v) for v in row) for row in P))
        object.__setattr__(self, "pi", tuple(float(v) for v in pi))
        object.__setattr__(self, "_P", P)
        object.__setattr__(self, "_pi", pi)
        object.__setattr__(self, "_powers", {1: P})
        object.__setattr__(self, "_cum_fwd", [list(np.cumsum(row)) for row in P])
        # time reversal drives the chain towards negative coordinates
        object.__setattr__(self, "_cum_bwd", [list(np.cumsum(row)) for row in self.reversed_matrix])
        object.__setattr__(self, "_cum_pi", list(np.cumsum(pi)))

    @property
    def alphabet_size(self) -> int:
        return len(self.pi)

    @property
    def reversed_matrix(self) -> np.ndarray:
        P, pi = self._P, self._pi
        return (P.T * pi[None, :]) / pi[:, None]

    def power(self, k: int) -> np.ndarray:
        if k not in self._powers:
            self._powers[k] = np.linalg.matrix_power(self._P, k)
        return self._powers[k]

    def log_cylinder_mass(self, c: Cylinder) -> float:
        if not c.items:
            return 0.0
        pos = np.fromiter((g for g, _ in c.items), dtype=np.int64, count=len(c.items))
        a = _symbols_of(c, self.alphabet_size)
        with np.errstate(divide="ignore"):
            total = math.log(self._pi[a[0]]) if self._pi[a[0]] > 0 else -math.inf
            gaps = np.diff(pos)
            one = gaps == 1
            if one.any():
                vals = self._P[a[:-1][one], a[1:][one]]
                total += float(np.log(vals).sum())
            for i in np.nonzero(~one)[0]:
                # non-adjacent coordinates: marginalise the gap with a matrix power
                v = self.power(int(gaps[i]))[a[i], a[i + 1]]
                total += math.log(v) if v > 0 else -math.inf
        return float(total)

    def entropy(self) -> float:
        return float(-(self._pi[:, None] * _xlogx(self._P)).sum())

    def sample_symbols(self, seed, elements, cache):
        z = np.asarray(elements, dtype=np.int64).reshape(-1)
        fwd = cache.setdefault("fwd", [])
        bwd = cache.setdefault("bwd", [])
        k1 = self.alphabet_size - 1
        hi = int(z.max())
        if hi >= len(fwd):
            coords = np.arange(len(fwd), hi + 1)
            u = uniforms(seed, AmenableGroup.integers().index_array(coords)).tolist()
            for c, ui in zip(coords.tolist(), u):
                if c == 0:
                    fwd.append(min(bisect.bisect_right(self._cum_pi, ui), k1))
                else:
                    fwd.append(min(bisect.bisect_right(self._cum_fwd[fwd[-1]], ui), k1))
        lo = int(z.min())
        if lo < -len(bwd):
            if not fwd:
                self.sample_symbols(seed, [0], cache)
            coords = np.arange(-len(bwd) - 1, lo - 1, -1)
            u = uniforms(seed, AmenableGroup.integers().index_array(coords)).tolist()
            for ui in u:
                prev = bwd[-1] if bwd else fwd[0]
                bwd.append(min(bisect.bisect_right(self._cum_bwd[prev], ui), k1))
        f = np.asarray(fwd, dtype=np.int64)
        b = np.asarray(bwd, dtype=np.int64)
        out = np.empty(z.shape, dtype=np.int64)
        nonneg = z >= 0
        out[nonneg] = f[z[nonneg]]
        out[~nonneg] = b[-z[~nonneg] - 1]
        return out


def cylinder_mass(mu: InvariantMeasure, c: Cylinder) -> float:
    return math.exp(mu.log_cylinder_mass(c))


def log_cylinder_mass(mu: InvariantMeasure, c: Cylinder) -> float:
    return mu.log_cylinder_mass(c)


def entropy_closed_form(mu: InvariantMeasure) -> float:
    return mu.entropy()


def sample_configuration(mu: InvariantMeasure, seed: int = DEFAULT_SEED) -> SampledConfiguration:
    return SampledConfiguration(mu, seed)


# partitions --------------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """A finite partition of the shift space into cylinders."""

    atoms: Tuple[Cylinder, ...]
    zero_coordinate: bool = False

    @classmethod
    def zero(cls, group: AmenableGroup, alphabet_size: int) -> "Partition":
        e = group.identity
        return cls(tuple(Cylinder(((e, a),)) for a in range(alphabet_size)), True)

    def classify(self, x: Configuration) -> int:
        hits = [i for i, c in enumerate(self.atoms) if c.contains(x)]
        if len(hits) != 1:
            raise DomainError(f"point lies in {len(hits)} atoms; not a partition")
        return hits[0]

    def validate(self, alphabet_size: int, cap: int = DEFAULT_ATOM_CAP) -> None:
        """Check disjointness and exhaustion on every pattern over the joint support."""
        support = sorted(frozenset().union(*(c.support for c in self.atoms)))
        if alphabet_size ** len(support) > cap:
            raise ResourceLimitError("partition support too large to validate", cap=cap)
        for word in itertools.product(range(alphabet_size), repeat=len(support)):
            values = dict(zip(support, word))
            hits = sum(all(values[g] == a for g, a in c.items) for c in self.atoms)
            if hits != 1:
                raise DomainError(f"pattern {word} lies in {hits} atoms")


def _join_atoms(group, P: Partition, F: Sequence[GroupElement], cap: int) -> List[Cylinder]:
    out = [Cylinder(())]
    for g in F:
        moved = [c.translate(group, g) for c in P.atoms]
        nxt = []
        for base in out:
            for c in moved:
                m = base.merge(c)
                if m is not None:
                    nxt.append(m)
        if len(nxt) > cap:
            raise ResourceLimitError(f"joined partition has more than {cap} atoms", attempted=len(nxt), cap=cap)
        out = nxt
    return out


def _chain_entropy(mu: InvariantMeasure, F: Sequence[GroupElement]) -> float:
    if isinstance(mu, Bernoulli):
        return len(F) * mu.entropy()
    if isinstance(mu, Markov):
        pos = sorted(F)
        total = shannon(mu._pi)
        for gap in np.diff(pos):
            Q = mu.power(int(gap))
            total += float(-(mu._pi[:, None] * _xlogx(Q)).sum())
        return total
    raise UnsupportedError(f"no chain rule for {type(mu).__name__}")


def partition_entropy(
    mu: InvariantMeasure, P: Partition, F: Iterable[GroupElement], cap: int = DEFAULT_ATOM_CAP, method: str = "auto"
) -> float:
    """``H_mu`` of the join of ``g^{-1} P`` over ``g in F``.

    ``method="atoms"`` sums over the atoms explicitly (bounded by ``cap``).
    ``method="chain"`` applies to the zero-coordinate partition, whose join
    records the coordinates on ``F``; independence (Bernoulli) or the Markov
    property turns the joint entropy into a sum of conditional entropies.
    """
    F = sorted(frozenset(mu.group.check(g) for g in F))
    if method == "auto":
        small = P.zero_coordinate and mu.alphabet_size ** len(F) <= cap
        method = "atoms" if small or not P.zero_coordinate else "chain"
    if method == "chain":
        if not P.zero_coordinate:
            raise UnsupportedError("the chain rule needs the zero-coordinate partition")
        return _chain_entropy(mu, F)
    if method != "atoms":
        raise DomainError(f"unknown method {method!r}")
    if P.zero_coordinate:
        if mu.alphabet_size ** len(F) > cap:
            raise ResourceLimitError(f"join has more than {cap} atoms", cap=cap)
        atoms = (
            Cylinder.from_symbols(F, w) for w in itertools.product(range(mu.alphabet_size), repeat=len(F))
        )
    else:
        atoms = _join_atoms(mu.group, P, F, cap)
    total = 0.0
    for c in atoms:
        lm = mu.log_cylinder_mass(c)
        if lm > -math.inf:
            total -= math.exp(lm) * lm
    return total


def atom_of(mu_group: AmenableGroup, P: Partition, x: Configuration, F: Iterable[GroupElement]) -> Cylinder:
    """The atom of the join over ``F`` containing ``x``."""
    F = sorted(frozenset(F))
    if P.zero_coordinate:
        return x.restrict(F)
    from .shift import act

    out = Cylinder(())
    for g in F:
        piece = P.atoms[P.classify(act(g, x))].translate(mu_group, g)
        out = out.merge(piece)
    return out
