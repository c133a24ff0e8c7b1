import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from amenable_entropy import (
    AmenableGroup,
    DomainError,
    FolnerSequence,
    GroupMismatchError,
    ResourceLimitError,
    folner_defect,
    folner_set,
    growth_report,
    invariance_defect,
    is_invariant,
    k_boundary,
    temperedness_report,
)

Z = AmenableGroup.integers()
Z2 = AmenableGroup.lattice(2)
Z3 = AmenableGroup.lattice(3)
H = AmenableGroup.heisenberg()
GROUPS = [Z, Z2, Z3, H]

small = st.integers(-6, 6)


def elements(group):
    if group.kind == "Z":
        return small
    return st.tuples(*([small] * (3 if group.kind == "heisenberg" else group.dim)))


def heis_matrix(g):
    a, b, c = g
    return ((1, a, c), (0, 1, b), (0, 0, 1))


def matmul(A, B):
    return tuple(tuple(sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)) for i in range(3))


# multiply ------------------------------------------------------------------------


def test_multiply_examples():
    assert Z.multiply(3, 4) == 7
    assert H.multiply((1, 0, 0), (0, 1, 0)) == (1, 1, 1)
    for g in [5, (2, -1), (1, 2, 3)]:
        group = {int: Z, 2: Z2, 3: H}[type(g) if isinstance(g, int) else len(g)]
        assert group.multiply(g, group.identity) == g


@given(st.data())
def test_heisenberg_law_matches_matrices(data):
    g = data.draw(elements(H))
    h = data.draw(elements(H))
    got = H.multiply(g, h)
    # oracle: product of upper-triangular integer matrices
    M = matmul(heis_matrix(g), heis_matrix(h))
    assert heis_matrix(got) == M


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
@given(data=st.data())
def test_inverse_and_associativity(group, data):
    g, h, k = (data.draw(elements(group)) for _ in range(3))
    assert group.multiply(g, group.inverse(g)) == group.identity
    assert group.multiply(group.inverse(g), g) == group.identity
    assert group.multiply(group.multiply(g, h), k) == group.multiply(g, group.multiply(h, k))


def test_mixed_operands_rejected():
    with pytest.raises(DomainError):
        Z2.multiply((1, 2), 3)
    with pytest.raises(DomainError):
        Z.multiply((1, 2), 3)
    assert issubclass(GroupMismatchError, DomainError)


def test_by_name():
    assert AmenableGroup.by_name("Z") == Z
    assert AmenableGroup.by_name("Z2") == Z2
    assert AmenableGroup.by_name("heisenberg") == H
    with pytest.raises(DomainError):
        AmenableGroup.by_name("F2")


# enumeration ---------------------------------------------------------------------


def test_z_spiral():
    assert Z.enumerate(5) == (0, 1, -1, 2, -2)


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
def test_enumeration_injective_and_stable(group):
    first = group.enumerate(400)
    assert first == group.enumerate(400)
    assert first[0] == group.identity
    assert len(set(first)) == len(first)
    for gen in group.generators:
        assert gen in first and group.inverse(gen) in first


@pytest.mark.parametrize("group", [Z2, Z3, H], ids=lambda g: g.name)
def test_enumeration_order_is_shell_then_lex(group):
    dim = 3 if group.kind == "heisenberg" else group.dim
    r = 12 if dim == 2 else 4
    m = (2 * r + 1) ** dim
    got = group.enumerate(m)
    # oracle: sort the whole cube by (max norm, lexicographic)
    cube = sorted(itertools.product(range(-r, r + 1), repeat=dim), key=lambda v: (max(map(abs, v)), v))
    assert got == tuple(cube[:m])


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
def test_index_of_inverts_enumeration(group):
    prefix = group.enumerate(300)
    assert [group.index_of(g) for g in prefix] == list(range(300))


# Folner sets ---------------------------------------------------------------------


def test_folner_set_examples():
    assert folner_set(FolnerSequence.boxes(Z), 3) == {0, 1, 2}
    assert folner_set(FolnerSequence.boxes(Z2), 2) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert len(folner_set(FolnerSequence.boxes(H), 2)) == 2 * 2 * 4
    with pytest.raises(DomainError):
        folner_set(FolnerSequence.boxes(Z), 0)


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
def test_box_sizes_strictly_increase(group):
    seq = FolnerSequence.boxes(group)
    sizes = [len(seq.elements(n)) for n in range(1, 8)]
    assert all(b > a for a, b in zip(sizes, sizes[1:]))
    assert sizes == [seq.size(n) for n in range(1, 8)]


@pytest.mark.parametrize("group,ns", [(Z, range(1, 1001, 37)), (Z2, [1, 2, 5, 10, 40]), (Z3, [1, 3, 8])])
def test_folner_defect_bound(group, ns):
    seq = FolnerSequence.boxes(group)
    d = group.dim
    for n in ns:
        for g in group.generators:
            assert folner_defect(seq, n, g) <= 2 * d / n + 1e-15


def test_heisenberg_defect_decreases():
    seq = FolnerSequence.boxes(H)
    for g in H.generators:
        vals = [folner_defect(seq, n, g) for n in range(2, 9)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.5


# temperedness --------------------------------------------------------------------


def brute_union_ratio(group, seq, n):
    union = set()
    for k in range(1, n):
        for a in seq.elements(k):
            for b in seq.elements(n):
                union.add(group.multiply(group.inverse(a), b))
    return len(union) / len(seq.elements(n))


def test_temperedness_z_examples():
    rep = temperedness_report(FolnerSequence.boxes(Z), 10)
    for n in range(2, 11):
        assert rep.ratio(n) == pytest.approx((2 * n - 2) / n, abs=1e-15)
    assert rep.witnessed_C == pytest.approx(1.8)
    assert temperedness_report(FolnerSequence.boxes(Z), 2).ratio(2) == 1.0


def test_temperedness_z2_examples():
    rep = temperedness_report(FolnerSequence.boxes(Z2), 10)
    for n in range(2, 11):
        assert rep.ratio(n) == pytest.approx((2 * n - 2) ** 2 / n**2, abs=1e-15)
    assert rep.witnessed_C <= 4


@pytest.mark.parametrize("group,N", [(Z, 12), (Z2, 7), (H, 3)], ids=["Z", "Z2", "H"])
def test_temperedness_matches_brute_force(group, N):
    seq = FolnerSequence.boxes(group)
    rep = temperedness_report(seq, N, method="sets")
    for n in range(2, N + 1):
        assert rep.ratio(n) == pytest.approx(brute_union_ratio(group, seq, n), abs=0)
    if group.is_abelian:
        assert temperedness_report(seq, N, method="axes") == rep


def test_temperedness_cap_and_domain():
    with pytest.raises(ResourceLimitError):
        temperedness_report(FolnerSequence.boxes(Z2), 50, cap=100)
    with pytest.raises(DomainError):
        temperedness_report(FolnerSequence.boxes(Z), 1)


def test_witnessed_c_bound_z3():
    assert temperedness_report(FolnerSequence.boxes(Z3), 200).witnessed_C <= 8


# growth --------------------------------------------------------------------------


def test_growth_examples():
    rz = dict(growth_report(FolnerSequence.boxes(Z), 2, 100).rows)
    assert rz[100] == pytest.approx(100 / math.log(100))
    assert rz[100] == pytest.approx(21.71, abs=5e-3)
    assert rz[2] == pytest.approx(2.885, abs=5e-4)
    r2 = dict(growth_report(FolnerSequence.boxes(Z2), 100, 100).rows)
    assert r2[100] == pytest.approx(2171.5, abs=0.05)
    with pytest.raises(DomainError):
        growth_report(FolnerSequence.boxes(Z), 1, 5)


def test_growth_flag_is_stepwise():
    assert growth_report(FolnerSequence.boxes(Z), 3, 200).increasing
    assert not growth_report(FolnerSequence.boxes(Z), 2, 3).increasing


# boundaries ----------------------------------------------------------------------


def brute_boundary(group, A, K, radius):
    A = set(A)
    out = set()
    rng = range(-radius, radius + 1)
    cands = rng if group.kind == "Z" else itertools.product(rng, repeat=group.dim)
    for g in cands:
        Kg = {group.multiply(k, g) for k in K}
        if Kg & A and Kg - A:
            out.add(g)
    return out


def test_k_boundary_examples():
    assert k_boundary(Z, range(10), [0, 1]) == {-1, 9}
    assert k_boundary(Z, [0], [0]) == frozenset()
    box = list(itertools.product(range(3), repeat=2))
    assert k_boundary(Z2, box, [(0, 0), (1, 0)]) == {(-1, j) for j in range(3)} | {(2, j) for j in range(3)}
    with pytest.raises(DomainError):
        k_boundary(Z, [], [0])


def test_invariance_examples():
    assert invariance_defect(Z, range(10), [0, 1]) == pytest.approx(0.2)
    assert invariance_defect(Z, [0], [0]) == 0.0
    for n in [5, 50, 500]:
        assert invariance_defect(Z, range(n), [0, 1]) == pytest.approx(2 / n)
    assert is_invariant(Z, range(10), [0, 1], 0.25)
    assert not is_invariant(Z, range(10), [0, 1], 0.2)


@given(
    A=st.sets(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=10),
    K=st.sets(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=1, max_size=4),
)
def test_k_boundary_property(A, K):
    got = k_boundary(Z2, A, K)
    cands = Z2.product_set([Z2.inverse(k) for k in K], A)
    assert got <= cands
    assert got == brute_boundary(Z2, A, K, 6)
