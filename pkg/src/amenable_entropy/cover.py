"""Weighted set cover over bitmask-encoded instances.

Targets are bit positions; each candidate is an ``int`` mask with a positive
weight.  ``greedy_cover`` applies the cost-per-new-target rule (within a
factor ``1 + ln U`` of optimal); ``exact_cover`` is a branch-and-bound that
starts from the greedy cover as incumbent.
"""

from __future__ import annotations

import heapq
import math
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import DomainError, ResourceLimitError

DEFAULT_BB_NODE_CAP = 2 * 10**6


@dataclass(frozen=True)
class CoverResult:
    chosen: Tuple[int, ...]
    cost: float
    optimality: str  # "exact" or "greedy-upper-bound"


def _bits(mask: int) -> List[int]:
    """Positions of set bits, ascending (linear in the bit length)."""
    if mask < 1 << 64:
        out = []
        while mask:
            low = mask & -mask
            out.append(low.bit_length() - 1)
            mask ^= low
        return out
    s = bin(mask)[:1:-1]  # little-endian digits
    out = []
    i = s.find("1")
    while i >= 0:
        out.append(i)
        i = s.find("1", i + 1)
    return out


def _coverers(masks: Sequence[int], universe: int) -> Dict[int, List[int]]:
    out: Dict[int, List[int]] = {t: [] for t in _bits(universe)}
    for i, m in enumerate(masks):
        for t in _bits(m & universe):
            out[t].append(i)
    missing = [t for t, cs in out.items() if not cs]
    if missing:
        raise DomainError(f"{len(missing)} targets cannot be covered by any candidate")
    return out


def greedy_cover(
    masks: Sequence[int],
    weights: Sequence[float],
    universe: int,
    keys: Optional[Sequence] = None,
) -> CoverResult:
    """Repeatedly take the candidate with least weight per newly covered target.

    Ties fall back to ``keys[i]`` and then the candidate index.  Scores only
    grow as targets get covered, so a lazily re-scored heap picks the same
    candidate as a full rescan.
    """
    _coverers(masks, universe)
    keys = keys if keys is not None else [()] * len(masks)
    heap = []
    for i, m in enumerate(masks):
        gain = (m & universe).bit_count()
        if gain:
            heap.append((weights[i] / gain, keys[i], i))
    heapq.heapify(heap)
    left = universe
    chosen = []
    while left:
        score, key, i = heapq.heappop(heap)
        gain = (masks[i] & left).bit_count()
        if not gain:
            continue
        fresh = weights[i] / gain
        if fresh == score:
            chosen.append(i)
            left &= ~masks[i]
        else:
            heapq.heappush(heap, (fresh, key, i))
    chosen.sort()
    return CoverResult(tuple(chosen), math.fsum(weights[i] for i in chosen), "greedy-upper-bound")


class _BranchAndBound:
    """Exact search on one connected instance with compact target bits."""

    def __init__(self, masks, weights, universe, node_cap):
        self.masks = masks
        self.weights = weights
        self.coverers = _coverers(masks, universe)
        # price[t] = least weight per target over sets holding t; summing it over
        # the uncovered targets bounds any completion from below
        levels: Dict[float, int] = {}
        for t, cs in self.coverers.items():
            price = min(weights[c] / masks[c].bit_count() for c in cs)
            levels[price] = levels.get(price, 0) | (1 << t)
        self.levels = list(levels.items())
        self.memo: Dict[int, Tuple[float, Tuple[int, ...]]] = {}
        self.node_cap = node_cap
        self.nodes = 0

    def lower_bound(self, U: int) -> float:
        return sum(p * (U & m).bit_count() for p, m in self.levels)

    def components(self, U: int, live: Sequence[int]) -> List[int]:
        out = []
        rest = U
        while rest:
            comp = rest & -rest
            grown = True
            while grown:
                grown = False
                for c in live:
                    m = self.masks[c]
                    if m & comp and (m & rest) & ~comp:
                        comp |= m & rest
                        grown = True
            out.append(comp)
            rest &= ~comp
        return out

    def solve(self, U: int, live: Sequence[int], incumbent: Optional[CoverResult] = None):
        if U == 0:
            return 0.0, ()
        if U in self.memo:
            return self.memo[U]
        live = [c for c in live if self.masks[c] & U]
        comps = self.components(U, live)
        if len(comps) > 1:
            cost, chosen = 0.0, ()
            for comp in comps:
                c_cost, c_chosen = self.solve(comp, live)
                cost += c_cost
                chosen += c_chosen
            self.memo[U] = (cost, chosen)
            return cost, chosen

        self.nodes += 1
        if self.nodes > self.node_cap:
            raise ResourceLimitError(f"branch and bound exceeded {self.node_cap} nodes", cap=self.node_cap)
        # branch on the target with the fewest ways to be covered
        t = min(_bits(U), key=lambda b: (len(self.coverers[b]), b))
        options = sorted(
            self.coverers[t], key=lambda c: (self.weights[c] / (self.masks[c] & U).bit_count(), c)
        )
        best_cost, best = math.inf, ()
        if incumbent is not None:
            best_cost, best = incumbent.cost, incumbent.chosen
        for c in options:
            rest = U & ~self.masks[c]
            w = self.weights[c]
            if w + self.lower_bound(rest) >= best_cost:
                continue
            sub_cost, sub = self.solve(rest, live)
            if w + sub_cost < best_cost:
                best_cost, best = w + sub_cost, (c,) + sub
        self.memo[U] = (best_cost, best)
        return best_cost, best


def split_components(masks: Sequence[int], universe: int) -> List[Tuple[List[int], List[int], int]]:
    """Connected components of the target/candidate incidence, re-indexed compactly.

    Depends only on the masks, so callers re-solving under new weights may
    compute it once and pass it to :func:`exact_cover`.
    """
    _coverers(masks, universe)
    return list(_split(masks, universe))


def _split(masks: Sequence[int], universe: int):
    targets = list(_bits(universe))
    parent = {t: t for t in targets}

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    members = []
    for i, m in enumerate(masks):
        bits = list(_bits(m & universe))
        members.append(bits)
        if bits:
            r = find(bits[0])
            for b in bits[1:]:
                rb = find(b)
                if rb != r:
                    parent[rb] = r
    groups: Dict[int, List[int]] = {}
    for t in targets:
        groups.setdefault(find(t), []).append(t)
    cand_of: Dict[int, List[int]] = {}
    for i, bits in enumerate(members):
        if bits:
            cand_of.setdefault(find(bits[0]), []).append(i)
    for root, ts in groups.items():
        local = {t: j for j, t in enumerate(ts)}
        cands = cand_of.get(root, [])
        local_masks = []
        for i in cands:
            lm = 0
            for b in members[i]:
                lm |= 1 << local[b]
            local_masks.append(lm)
        yield cands, local_masks, (1 << len(ts)) - 1


def exact_cover(
    masks: Sequence[int],
    weights: Sequence[float],
    universe: int,
    keys: Optional[Sequence] = None,
    node_cap: int = DEFAULT_BB_NODE_CAP,
    components: Optional[List[Tuple[List[int], List[int], int]]] = None,
) -> CoverResult:
    """Minimum-weight cover by branch and bound.

    The instance is split into connected components first; each component is
    searched with memoisation on the uncovered set and its greedy cover as the
    starting incumbent.
    """
    if universe == 0:
        return CoverResult((), 0.0, "exact")
    if components is None:
        components = split_components(masks, universe)
    keys = keys if keys is not None else [()] * len(masks)
    chosen: List[int] = []
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * universe.bit_length() + 1000))
    try:
        for cands, local_masks, local_universe in components:
            local_weights = [weights[i] for i in cands]
            if local_universe == 1:
                best = min(range(len(cands)), key=lambda j: (local_weights[j], keys[cands[j]], cands[j]))
                chosen.append(cands[best])
                continue
            local_keys = [keys[i] for i in cands]
            incumbent = greedy_cover(local_masks, local_weights, local_universe, local_keys)
            bb = _BranchAndBound(local_masks, local_weights, local_universe, node_cap)
            _, picked = bb.solve(local_universe, range(len(cands)), incumbent)
            chosen.extend(cands[j] for j in picked)
    finally:
        sys.setrecursionlimit(old)
    chosen = sorted(set(chosen))
    return CoverResult(tuple(chosen), math.fsum(weights[i] for i in chosen), "exact")


def is_cover(masks: Sequence[int], chosen: Sequence[int], universe: int) -> bool:
    got = 0
    for i in chosen:
        got |= masks[i]
    return got & universe == universe
