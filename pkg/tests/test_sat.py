import itertools
import random

import pytest

from circuits import random_netlist
from sublock.bench import GateKind, parse_bench, simulate
from sublock.sat import (
    CdclSolver,
    CnfFormula,
    SatStatus,
    circuits_equivalent,
    exhaustive_equivalence,
    lit_value,
    miter_equivalence,
    solve,
    to_dimacs,
    tseitin,
)


def test_tseitin_and_gate_clauses():
    nl = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)")
    f = tseitin(nl)
    lit = f.var_maps["c0"]
    a, b, y = (lit[nl.id_of(n)] for n in ("a", "b", "y"))
    got = {tuple(sorted(c)) for c in f.clauses}
    want = {tuple(sorted(c)) for c in ([-a, -b, y], [a, -y], [b, -y])}
    assert got == want


def test_tseitin_multiple_copies_fresh_vars():
    nl = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)")
    f = CnfFormula()
    m0 = f.add_netlist(nl, "copy0")
    m1 = f.add_netlist(nl, "copy1")
    assert set(m0.values()).isdisjoint(set(m1.values()))


def test_solve_unit():
    f = CnfFormula()
    x = f.new_var()
    f.add_clause([x])
    res = solve(f)
    assert res.status is SatStatus.SAT
    assert res.model[x - 1] == 1


def test_solve_contradiction():
    f = CnfFormula()
    x = f.new_var()
    f.add_clause([x])
    f.add_clause([-x])
    assert solve(f).status is SatStatus.UNSAT


def php(pigeons, holes):
    """Pigeonhole principle clauses over vars p[i][j] = 1 + i*holes + j."""
    f = CnfFormula()
    var = [[f.new_var() for _ in range(holes)] for _ in range(pigeons)]
    for i in range(pigeons):
        f.add_clause([var[i][j] for j in range(holes)])
    for j in range(holes):
        for i1 in range(pigeons):
            for i2 in range(i1 + 1, pigeons):
                f.add_clause([-var[i1][j], -var[i2][j]])
    return f


def test_php_4_3_unsat():
    f = php(4, 3)
    assert solve(f).status is SatStatus.UNSAT
    # independent cross-check by exhaustive assignment enumeration
    n = f.num_vars
    for bits in range(1 << n):
        model = tuple((bits >> i) & 1 for i in range(n))
        if all(any(lit_value(model, l) for l in c) for c in f.clauses):
            pytest.fail("PHP(4,3) unexpectedly satisfiable")


def test_model_is_checked_against_clauses():
    rng = random.Random(3)
    for _ in range(30):
        f = CnfFormula()
        nvars = rng.randrange(3, 8)
        for _ in range(nvars):
            f.new_var()
        for _ in range(rng.randrange(2, 12)):
            width = rng.randrange(1, 4)
            lits = []
            while len(lits) < width:
                v = rng.randrange(1, nvars + 1)
                l = v if rng.random() < 0.5 else -v
                if l not in lits and -l not in lits:
                    lits.append(l)
            f.add_clause(lits)
        res = solve(f)
        if res.is_sat:
            assert all(any(lit_value(res.model, l) for l in c) for c in f.clauses)


def test_tseitin_models_match_simulation():
    for seed in range(60):
        nl = random_netlist(seed, 4, 10)
        f = tseitin(nl)
        lit = f.var_maps["c0"]
        s = CdclSolver(f.num_vars)
        for c in f.clauses:
            s.add_clause(c)
        for p in range(16):
            bits = tuple((p >> (3 - i)) & 1 for i in range(4))
            assumptions = [
                lit[i] if b else -lit[i] for i, b in zip(nl.primary_inputs, bits)
            ]
            res = s.solve(assumptions)
            assert res.is_sat
            got = tuple(lit_value(res.model, lit[o]) for o in nl.primary_outputs)
            assert got == simulate(nl, bits)


def test_assumption_incrementality():
    rng = random.Random(11)
    for _ in range(40):
        f = CnfFormula()
        nvars = 6
        for _ in range(nvars):
            f.new_var()
        for _ in range(rng.randrange(4, 18)):
            lits = []
            while len(lits) < 3:
                v = rng.randrange(1, nvars + 1)
                l = v if rng.random() < 0.5 else -v
                if l not in lits and -l not in lits:
                    lits.append(l)
            f.add_clause(lits)
        s = CdclSolver(f.num_vars)
        for c in f.clauses:
            s.add_clause(c)
        pos = s.solve([1]).status
        neg = s.solve([-1]).status
        base = s.solve().status
        if pos is SatStatus.UNSAT and neg is SatStatus.UNSAT:
            assert base is SatStatus.UNSAT
        if base is SatStatus.SAT:
            assert pos is SatStatus.SAT or neg is SatStatus.SAT


def test_incremental_clause_addition():
    s = CdclSolver()
    s.ensure_vars(2)
    s.add_clause([1, 2])
    assert s.solve().is_sat
    s.add_clause([-1])
    res = s.solve()
    assert res.is_sat
    assert res.model[1 - 1] == 0
    assert res.model[2 - 1] == 1
    s.add_clause([-2])
    assert s.solve().status is SatStatus.UNSAT


def test_miter_self_equivalence(c17):
    assert miter_equivalence(c17, c17).equivalent


def test_miter_detects_inverted_output(half_adder):
    twisted = parse_bench(
        "INPUT(A)\nINPUT(B)\nOUTPUT(S)\nOUTPUT(C)\nS = XNOR(A, B)\nC = AND(A, B)"
    )
    res = miter_equivalence(half_adder, twisted)
    assert not res.equivalent
    x = res.counterexample
    assert simulate(half_adder, x) != simulate(twisted, x)


def test_miter_agrees_with_exhaustive():
    rng = random.Random(5)
    agree_checked = 0
    for seed in range(40):
        a = random_netlist(seed, rng.randrange(3, 7), rng.randrange(5, 14))
        if rng.random() < 0.5:
            b = a
        else:
            # perturb one gate kind to get likely-inequivalent variant
            gates = list(a.gates)
            gi = rng.randrange(len(gates))
            g = gates[gi]
            new_kind = (
                GateKind.NAND if g.kind is not GateKind.NAND else GateKind.AND
            )
            if g.kind in (GateKind.NOT, GateKind.BUF):
                new_kind = GateKind.NOT if g.kind is GateKind.BUF else GateKind.BUF
            gates[gi] = type(g)(new_kind, g.inputs, g.output)
            b = type(a)(a.names, a.primary_inputs, a.key_inputs, a.primary_outputs, tuple(gates))
        sat_res = miter_equivalence(a, b)
        exh_res = exhaustive_equivalence(a, b)
        assert sat_res.equivalent == exh_res.equivalent
        agree_checked += 1
    assert agree_checked == 40


def test_circuits_equivalent_dispatch(c17):
    assert circuits_equivalent(c17, c17).equivalent


def test_dimacs_export():
    f = CnfFormula()
    x, y = f.new_var(), f.new_var()
    f.add_clause([x, -y])
    f.add_clause([y])
    text = to_dimacs(f)
    lines = text.strip().splitlines()
    assert lines[0] == "p cnf 2 2"
    assert lines[1] == "1 -2 0"
    assert lines[2] == "2 0"


def test_empty_clause_rejected():
    f = CnfFormula()
    with pytest.raises(Exception):
        f.add_clause([])
