import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amenable_entropy import (
    AmenableGroup,
    Bernoulli,
    Cylinder,
    DomainError,
    FolnerSequence,
    Markov,
    Partition,
    ResourceLimitError,
    cylinder_mass,
    entropy_closed_form,
    partition_entropy,
    sample_configuration,
)
from amenable_entropy.measure import DEFAULT_SEED, atom_of, uniforms

Z = AmenableGroup.integers()
Z2 = AmenableGroup.lattice(2)
P_EX = [[0.9, 0.1], [0.5, 0.5]]
MK = Markov(P_EX)
B3 = Bernoulli((0.3, 0.7))
B_HALF = Bernoulli((0.5, 0.5))


def markov_oracle(P, pi, c):
    """Sum pi_{w0} prod P over all words on the hull of the support."""
    P = np.asarray(P)
    items = dict(c.items)
    lo, hi = min(items), max(items)
    total = 0.0
    for w in itertools.product(range(len(pi)), repeat=hi - lo + 1):
        if any(w[g - lo] != a for g, a in items.items()):
            continue
        p = pi[w[0]]
        for a, b in zip(w, w[1:]):
            p *= P[a, b]
        total += p
    return total


cylinders_z = st.dictionaries(st.integers(-4, 4), st.integers(0, 1), min_size=1, max_size=5).map(Cylinder.from_mapping)


# validation ------------------------------------------------------------------------


def test_bernoulli_validation():
    with pytest.raises(DomainError):
        Bernoulli((0.5, 0.6))
    with pytest.raises(DomainError):
        Bernoulli((1.2, -0.2))
    with pytest.raises(DomainError):
        Bernoulli((1.0,))


def test_markov_validation():
    with pytest.raises(DomainError):
        Markov([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(DomainError):
        Markov([[0.0, 1.0], [1.0, 0.0]])  # periodic
    with pytest.raises(DomainError):
        Markov(P_EX, pi=(0.5, 0.5))
    pi = np.asarray(MK.pi)
    assert np.abs(pi @ np.asarray(P_EX) - pi).max() <= 1e-10


# masses ----------------------------------------------------------------------------


def test_mass_examples():
    n = 9
    assert cylinder_mass(B_HALF, Cylinder.from_symbols(range(n), [1] * n)) == pytest.approx(2.0**-n, rel=1e-15)
    assert cylinder_mass(B3, Cylinder.from_mapping({0: 0, 5: 1})) == pytest.approx(0.21, rel=1e-14)
    # pi solves pi P = pi: pi_0 (0.1) = pi_1 (0.5) => pi = (5/6, 1/6)
    assert MK.pi == pytest.approx((5 / 6, 1 / 6), abs=1e-14)
    assert cylinder_mass(MK, Cylinder.from_mapping({0: 0, 1: 1})) == pytest.approx(1 / 12, rel=1e-12)


def test_mass_rejects_bad_symbols():
    with pytest.raises(DomainError):
        cylinder_mass(B3, Cylinder.from_mapping({0: 2}))


@given(c=cylinders_z)
def test_markov_mass_matches_path_sum(c):
    assert cylinder_mass(MK, c) == pytest.approx(markov_oracle(P_EX, MK.pi, c), rel=1e-12, abs=1e-15)


@given(c=cylinders_z, g=st.integers(-50, 50))
def test_translation_invariance(c, g):
    moved = c.translate(Z, g)
    assert cylinder_mass(B3, c) == cylinder_mass(B3, moved)
    assert cylinder_mass(MK, c) == pytest.approx(cylinder_mass(MK, moved), abs=1e-12)


@given(
    c=st.dictionaries(
        st.tuples(st.integers(-3, 3), st.integers(-3, 3)), st.integers(0, 1), min_size=1, max_size=5
    ).map(Cylinder.from_mapping),
    g=st.tuples(st.integers(-9, 9), st.integers(-9, 9)),
)
def test_translation_invariance_z2(c, g):
    mu = Bernoulli((0.3, 0.7), Z2)
    assert cylinder_mass(mu, c) == cylinder_mass(mu, c.translate(Z2, g))


@given(c=cylinders_z, g=st.integers(-6, 6))
def test_additivity(c, g):
    if g in c.support:
        return
    for mu in (B3, MK):
        parts = [cylinder_mass(mu, c.merge(Cylinder(((g, a),)))) for a in range(2)]
        assert math.fsum(parts) == pytest.approx(cylinder_mass(mu, c), abs=1e-12)


# entropy ---------------------------------------------------------------------------


def test_entropy_closed_forms():
    h3 = -0.3 * math.log(0.3) - 0.7 * math.log(0.7)
    assert entropy_closed_form(B_HALF) == pytest.approx(math.log(2), abs=1e-15)
    assert entropy_closed_form(B3) == pytest.approx(h3, abs=1e-15)
    assert entropy_closed_form(B3) == pytest.approx(0.6109, abs=1e-4)
    assert entropy_closed_form(Bernoulli((1.0, 0.0))) == 0.0
    pi = (5 / 6, 1 / 6)
    hm = -sum(pi[i] * P_EX[i][j] * math.log(P_EX[i][j]) for i in range(2) for j in range(2))
    assert entropy_closed_form(MK) == pytest.approx(hm, abs=1e-14)


def test_partition_entropy_examples():
    zero = Partition.zero(Z, 2)
    seq = FolnerSequence.boxes(Z)
    h3 = -0.3 * math.log(0.3) - 0.7 * math.log(0.7)
    for n in (1, 5, 12):
        assert partition_entropy(B_HALF, zero, seq.elements(n)) == pytest.approx(n * math.log(2), abs=1e-12)
        atoms = partition_entropy(B3, zero, seq.elements(n), method="atoms")
        chain = partition_entropy(B3, zero, seq.elements(n), method="chain")
        assert atoms == pytest.approx(n * h3, abs=1e-11)
        assert chain == pytest.approx(n * h3, abs=1e-12)
    for mu in (B3, MK):
        assert partition_entropy(mu, zero, [0]) == pytest.approx(-sum(p * math.log(p) for p in mu_p(mu)), abs=1e-14)


def mu_p(mu):
    return mu.p if isinstance(mu, Bernoulli) else mu.pi


@given(F=st.sets(st.integers(-6, 6), min_size=1, max_size=8))
def test_markov_chain_rule_matches_atoms(F):
    zero = Partition.zero(Z, 2)
    assert partition_entropy(MK, zero, F, method="chain") == pytest.approx(
        partition_entropy(MK, zero, F, method="atoms"), abs=1e-11
    )


def test_partition_entropy_rate():
    zero = Partition.zero(Z, 2)
    seq = FolnerSequence.boxes(Z)
    ns = [1, 2, 3, 5, 10, 50, 200, 700, 1500, 2000]
    b = [partition_entropy(B3, zero, seq.elements(n)) / n for n in ns]
    assert max(b) - min(b) <= 1e-12
    m = [partition_entropy(MK, zero, seq.elements(n)) / n for n in ns]
    assert all(y <= x + 1e-15 for x, y in zip(m, m[1:]))
    assert m[-1] == pytest.approx(entropy_closed_form(MK), abs=1e-3)


def test_general_partition_join():
    # atoms fixing two consecutive coordinates: the join over F is the zero partition over F u (F+1)
    pairs = Partition(tuple(Cylinder.from_symbols([0, 1], w) for w in itertools.product(range(2), repeat=2)))
    pairs.validate(2)
    F = [0, 1, 2, 3]
    zero = Partition.zero(Z, 2)
    for mu in (B3, MK):
        assert partition_entropy(mu, pairs, F) == pytest.approx(partition_entropy(mu, zero, range(5)), abs=1e-12)
    x = sample_configuration(MK, 3)
    assert atom_of(Z, pairs, x, F) == x.restrict(range(5))


def test_partition_validation_and_cap():
    bad = Partition((Cylinder.from_mapping({0: 0}), Cylinder.from_mapping({0: 0, 1: 1})))
    with pytest.raises(DomainError):
        bad.validate(2)
    with pytest.raises(ResourceLimitError):
        partition_entropy(B3, Partition.zero(Z, 2), range(30), method="atoms")


def test_partition_classifies_sampled_points():
    zero = Partition.zero(Z, 2)
    for seed in range(20):
        x = sample_configuration(B3, seed)
        assert zero.classify(x) == x.symbol_at(0)


# sampling --------------------------------------------------------------------------


def test_sampling_examples():
    x = sample_configuration(Bernoulli((1.0, 0.0)))
    assert not x.symbols(list(range(-500, 500))).any()
    y = sample_configuration(B_HALF)
    freq = y.symbols(list(range(10**4))).mean()
    assert abs(freq - 0.5) <= 0.02
    a, b = sample_configuration(B3, 11), sample_configuration(B3, 11)
    pts = np.random.default_rng(0).integers(-10**6, 10**6, size=1000).tolist()
    assert np.array_equal(a.symbols(pts), b.symbols(pts))
    assert np.array_equal(a.symbols(pts[::-1]), a.symbols(pts)[::-1])


def test_default_seed_is_fixed():
    assert sample_configuration(B3).seed == DEFAULT_SEED


def test_uniforms_in_unit_interval():
    u = uniforms(5, np.arange(10**5))
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


@pytest.mark.parametrize("window", [range(0, 20000), range(-20000, 0)], ids=["forward", "backward"])
def test_markov_sample_pair_frequencies(window):
    x = sample_configuration(MK, 99)
    s = x.symbols(list(window) + [window[-1] + 1])
    pairs = np.bincount(2 * s[:-1] + s[1:], minlength=4) / (len(s) - 1)
    pi = np.asarray(MK.pi)
    expected = (pi[:, None] * np.asarray(P_EX)).ravel()
    assert np.abs(pairs - expected).max() < 0.015


def test_markov_sampling_order_independent():
    a = sample_configuration(MK, 5)
    b = sample_configuration(MK, 5)
    pts = list(range(-300, 300))
    b.symbols(pts[::-1][:50])
    assert np.array_equal(a.symbols(pts), b.symbols(pts))


def test_bernoulli_sampler_on_z2():
    mu = Bernoulli((0.3, 0.7), Z2)
    x = sample_configuration(mu, 1)
    box = FolnerSequence.boxes(Z2).elements(100)
    assert abs(x.symbols(box).mean() - 0.7) < 0.02
