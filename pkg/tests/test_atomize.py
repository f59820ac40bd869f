import random

import pytest
from hypothesis import given, settings, strategies as st

from wordste import benchmarks
from wordste.atomize import (
    AtomizeError,
    Atomization,
    atomize_accesses,
    atomize_design,
    design_accesses,
    induce,
    refine,
)
from wordste.ir.elaborate import elaborate_text
from wordste.ste import elaborate_spec
from support import random_design


def brute_atoms(width, accesses):
    """Atoms as classes of bit positions that every access treats alike."""
    sig = {}
    for b in range(width):
        sig[b] = tuple(lo <= b <= hi for hi, lo in accesses)
    atoms, start = [], 0
    for b in range(1, width + 1):
        if b == width or sig[b] != sig[start]:
            atoms.append((b - 1, start))
            start = b
    return sorted(atoms, reverse=True)


@pytest.mark.parametrize(
    "m, q, p, want",
    [
        (16, 10, 7, [(15, 11), (10, 7), (6, 0)]),
        (16, 15, 0, [(15, 0)]),
        (8, 7, 4, [(7, 4), (3, 0)]),
        (8, 3, 0, [(7, 4), (3, 0)]),
    ],
)
def test_induce(m, q, p, want):
    assert induce(m, q, p).atoms == want


def test_induce_out_of_range():
    with pytest.raises(AtomizeError):
        induce(8, 8, 0)


def test_refine_examples():
    whole, halves = induce(8, 7, 0), induce(8, 7, 4)
    assert refine(whole, halves).atoms == [(7, 4), (3, 0)]
    assert refine(induce(8, 7, 4), induce(8, 5, 2)).atoms == [(7, 6), (5, 4), (3, 2), (1, 0)]
    assert refine(halves, halves) == halves


def test_fragment_cut_sets():
    d = elaborate_text("input a:16, b:8; wire c:8; c[4:1] = a[10:7] + b[5:2]; c[7:5] = 0; c[0] = 0;")
    amap = atomize_design(d)
    assert amap["a"].atoms == [(15, 11), (10, 7), (6, 0)]
    assert amap["b"].atoms == [(7, 6), (5, 2), (1, 0)]
    assert amap["c"].atoms == [(7, 5), (4, 1), (0, 0)]


def test_no_slices_one_atom_per_word():
    d = elaborate_text("input a:8, b:8; wire s:8; reg r:8; s = a + b; r <= s ^ r;")
    amap = atomize_design(d)
    assert all(len(at.atoms) == 1 for at in amap.values())


def test_arrays_and_variable_shifts_not_cut():
    d = elaborate_text("input i:2, a:8, k:8; array M:[2]8; wire y:8, z:8; y = M[i]; z = a << k;")
    amap = atomize_design(d)
    assert amap["a"].atoms == [(7, 0)]
    assert amap["y"].atoms == [(7, 0)]


def test_constant_shift_reads_surviving_bits():
    d = elaborate_text("input a:8; wire z:8; z = a << 3;")
    assert atomize_design(d)["a"].atoms == [(7, 5), (4, 0)]


def test_spec_references_are_atomized():
    d = elaborate_text(benchmarks.read("twogate"))
    sp = elaborate_spec(benchmarks.read("twogate.spec"), d)
    amap = atomize_design(d, sp)
    assert amap["y"].atoms == [(3, 2), (1, 0)]


def test_sad_is_not_bit_blasted():
    d = elaborate_text(benchmarks.read("sad"), {"W": 32})
    assert atomize_design(d).largest() >= 32


ACCESS = st.integers(1, 16).flatmap(
    lambda w: st.tuples(
        st.just(w),
        st.lists(st.tuples(st.integers(0, w - 1), st.integers(0, w - 1)).map(lambda t: (max(t), min(t))), max_size=6),
    )
)


@settings(max_examples=300, deadline=None)
@given(ACCESS)
def test_atoms_match_brute_force(case):
    w, acc = case
    got = atomize_accesses({"w": w}, [("w", hi, lo) for hi, lo in acc])["w"].atoms
    assert got == brute_atoms(w, acc)


@settings(max_examples=200, deadline=None)
@given(ACCESS, st.randoms(use_true_random=False))
def test_order_independent_and_aligned(case, rnd):
    w, acc = case
    base = atomize_accesses({"w": w}, [("w", hi, lo) for hi, lo in acc])
    shuffled = list(acc)
    rnd.shuffle(shuffled)
    assert atomize_accesses({"w": w}, [("w", hi, lo) for hi, lo in shuffled]) == base
    at = base["w"]
    for hi, lo in acc:
        assert at.aligned(hi, lo)
        parts = at.atoms_in(hi, lo)
        assert parts[0][0] == hi and parts[-1][1] == lo
    # fixpoint: the atoms themselves induce nothing new
    again = atomize_accesses({"w": w}, [("w", hi, lo) for hi, lo in acc] + [("w", h, l) for h, l in at.atoms])
    assert again == base


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12).flatmap(lambda w: st.tuples(st.just(w), st.sets(st.integers(1, w - 1) if w > 1 else st.nothing()),
                                                       st.sets(st.integers(1, w - 1) if w > 1 else st.nothing()))))
def test_refine_lattice_laws(case):
    w, c1, c2 = case
    a, b = Atomization(w, frozenset(c1)), Atomization(w, frozenset(c2))
    assert refine(a, b) == refine(b, a)
    assert refine(a, a) == a
    assert refine(refine(a, b), b) == refine(a, b)


def test_random_design_accesses_aligned():
    rng = random.Random(3)
    for _ in range(30):
        header, stmts = random_design(rng)
        d = elaborate_text(header + "\n" + "\n".join(stmts))
        amap = atomize_design(d)
        for w, hi, lo in design_accesses(d):
            assert amap[w].aligned(hi, lo)
