import itertools
import random

import pytest

from circuits import random_netlist
from sublock.bench import GateKind, parse_bench, simulate
from sublock.tables import (
    DASH,
    DC,
    ONE,
    SopCover,
    TableError,
    TruthTable,
    ZERO,
    cost,
    cube_covers,
    cube_literals,
    cube_minterms,
    minimize,
    netlist_of_sop,
    pla_text,
    prime_implicants,
    sop_literal_pins,
    table_of_netlist,
)


def tt1(num_vars, col):
    return TruthTable(num_vars, (tuple(col),))


def random_table(rng, v, dc_prob=0.2):
    return tt1(v, [DC if rng.random() < dc_prob else rng.randrange(2) for _ in range(1 << v)])


# -- extraction --------------------------------------------------------------

def test_table_of_half_adder(half_adder):
    s = half_adder.id_of("S")
    a, b = half_adder.id_of("A"), half_adder.id_of("B")
    tt = table_of_netlist(half_adder, [s], [a, b])
    assert tt.outputs[0] == (0, 1, 1, 0)


def test_table_of_demo5_sub_circuit(demo5):
    y = demo5.id_of("y")
    support = [demo5.id_of(n) for n in ("c", "d", "e")]
    tt = table_of_netlist(demo5, [y], support)
    # NOT(c·d) + d·e over cde = 000..111
    assert tt.outputs[0] == (1, 1, 1, 1, 1, 1, 0, 1)


def test_table_of_constant_zero():
    nl = parse_bench("INPUT(a)\nOUTPUT(z)\nz = XOR(a, a)")
    tt = table_of_netlist(nl, [nl.id_of("z")], [nl.id_of("a")])
    assert tt.outputs[0] == (0, 0)


def test_table_support_too_large(c17):
    with pytest.raises(TableError):
        table_of_netlist(c17, [c17.primary_outputs[0]], list(range(17)))


def test_table_outside_support(half_adder):
    s = half_adder.id_of("S")
    with pytest.raises(TableError) as e:
        table_of_netlist(half_adder, [s], [half_adder.id_of("A")])
    assert "B" in str(e.value)


# -- minimization ------------------------------------------------------------

def test_minimize_xor():
    cover = minimize(tt1(2, [0, 1, 1, 0]), 0)
    c = cost(cover)
    assert c.cubes == 2 and c.literals == 4


def test_minimize_dontcare_tautology():
    cover = minimize(tt1(2, [1, 1, 1, DC]), 0)
    assert cover.cubes == ((DASH, DASH),)


def test_minimize_single_literal_choice():
    # On = {11}, DC = {01, 10}: either lone literal works; tie-break picks
    # the lexicographically smaller cube, which is the first variable
    cover = minimize(tt1(2, [0, DC, DC, 1]), 0)
    c = cost(cover)
    assert c.cubes == 1 and c.literals == 1
    assert cover.cubes == ((1, DASH),)


def test_minimize_empty_onset():
    cover = minimize(tt1(2, [0, 0, 0, 0]), 0)
    assert cover.cubes == ()
    assert cost(cover) == type(cost(cover))(0, 0)


def test_minimize_respects_on_and_off_sets():
    rng = random.Random(42)
    for _ in range(250):
        v = rng.randrange(1, 7)
        tt = random_table(rng, v)
        cover = minimize(tt, 0)
        for m in range(1 << v):
            want = tt.outputs[0][m]
            if want == DC:
                continue
            assert cover.evaluate(m) == want


def independent_primes(v, onset, dcset):
    """All prime implicants by brute-force cube filtering."""
    care = onset | dcset
    implicants = []
    for cube in itertools.product((0, 1, DASH), repeat=v):
        ms = list(cube_minterms(cube, v))
        if all(m in care for m in ms) and any(m in onset for m in ms):
            implicants.append(cube)
    primes = []
    for c in implicants:
        grown = False
        for i in range(v):
            if c[i] != DASH:
                up = tuple(DASH if j == i else c[j] for j in range(v))
                if all(m in care for m in cube_minterms(up, v)):
                    grown = True
                    break
        if not grown:
            primes.append(c)
    return primes


def test_minimality_against_enumeration():
    rng = random.Random(9)
    for _ in range(60):
        v = rng.randrange(1, 5)
        tt = random_table(rng, v, dc_prob=0.25)
        onset = {i for i, x in enumerate(tt.outputs[0]) if x == ONE}
        dcset = {i for i, x in enumerate(tt.outputs[0]) if x == DC}
        got = minimize(tt, 0)
        if not onset:
            assert got.cubes == ()
            continue
        primes = independent_primes(v, onset, dcset)
        assert sorted(prime_implicants(v, onset, dcset)) == sorted(primes)
        best = None
        for size in range(1, len(primes) + 1):
            for combo in itertools.combinations(primes, size):
                covered = set()
                for c in combo:
                    covered.update(m for m in cube_minterms(c, v) if m in onset)
                if covered >= onset:
                    best = size
                    break
            if best is not None:
                break
        assert len(got.cubes) == best


# -- synthesis ---------------------------------------------------------------

def test_netlist_of_single_cube():
    cover = SopCover(2, ((1, 1),))
    nl = netlist_of_sop([cover], ["A", "B"], ["y"])
    assert len(nl.gates) == 1
    assert nl.gates[0].kind is GateKind.AND


def test_netlist_of_xor_sop():
    cover = SopCover(2, ((0, 1), (1, 0)))
    nl = netlist_of_sop([cover], ["A", "B"], ["y"])
    kinds = sorted(g.kind.value for g in nl.gates)
    assert kinds == ["AND", "AND", "NOT", "NOT", "OR"]
    assert sop_literal_pins(nl, ["A", "B"]) == 4


def test_sop_roundtrip_random_tables():
    rng = random.Random(1234)
    for _ in range(300):
        v = rng.randrange(1, 7)
        tt = random_table(rng, v)
        cover = minimize(tt, 0)
        names = [f"v{i}" for i in range(v)]
        nl = netlist_of_sop([cover], names, ["y"])
        for m in range(1 << v):
            bits = tuple((m >> (v - 1 - i)) & 1 for i in range(v))
            want = tt.outputs[0][m]
            got = simulate(nl, bits)[0]
            if want != DC:
                assert got == want
            assert got == cover.evaluate(m)


def test_sop_literal_pin_equality():
    rng = random.Random(77)
    for _ in range(120):
        v = rng.randrange(1, 7)
        tt = random_table(rng, v)
        cover = minimize(tt, 0)
        if not cover.cubes or cover.cubes == ((DASH,) * v,):
            continue  # constant covers use the 2-pin gadget
        names = [f"v{i}" for i in range(v)]
        nl = netlist_of_sop([cover], names, ["y"])
        assert sop_literal_pins(nl, names) == cost(cover).literals


def test_cost_values():
    assert cost(SopCover(2, ((DASH, DASH),))) == type(cost(SopCover(2, ())))(1, 0)
    assert cost(SopCover(2, ((0, 1), (1, 0)))).literals == 4
    assert cost(SopCover(2, ())).cubes == 0


def test_pla_dump_smoke():
    tt = tt1(2, [0, 1, 1, 0])
    text = pla_text(tt)
    assert text.startswith(".i 2\n.o 1\n")
    assert text.rstrip().endswith(".e")
