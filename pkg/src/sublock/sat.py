"""CNF lowering, a CDCL decision procedure, and miter equivalence checking.

The solver is self-contained and deterministic: branching always picks the
lowest-numbered unassigned variable and tries false first, so iteration
counts in attack reports are reproducible.  Formulas may be grown
incrementally (clauses are only ever added), which is what the attack loop
needs.  `--dump-cnf` style DIMACS export is available via :func:`to_dimacs`
for cross-checking with any external solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .bench import GateKind, Netlist, eval_nets, full_mask, pattern_words, simulate


class SatStatus(Enum):
    SAT = "sat"
    UNSAT = "unsat"


@dataclass
class SatResult:
    status: SatStatus
    model: Optional[Tuple[int, ...]]  # model[v-1] in {0,1} when SAT

    @property
    def is_sat(self) -> bool:
        return self.status is SatStatus.SAT


class CnfError(Exception):
    pass


class CnfFormula:
    """Clause container plus per-copy net-to-literal maps.

    Net maps store *literals*: NOT and BUF gates never allocate variables,
    they alias the (possibly negated) input literal.  ``add_netlist`` with a
    shared ``cache`` performs structural hashing, so identical gates across
    copies collapse to one variable; that keeps miters of almost-identical
    circuits small.
    """

    def __init__(self):
        self.num_vars = 0
        self.clauses: List[List[int]] = []
        self.var_maps: Dict[str, Dict[int, int]] = {}

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add_clause(self, lits: Sequence[int]):
        clause = list(lits)
        if not clause:
            raise CnfError("empty clause")
        for lit in clause:
            if lit == 0 or abs(lit) > self.num_vars:
                raise CnfError(f"literal {lit} references an undeclared variable")
        self.clauses.append(clause)

    def add_netlist(
        self,
        nl: Netlist,
        tag: str,
        bind: Optional[Dict[int, int]] = None,
        cache: Optional[dict] = None,
    ) -> Dict[int, int]:
        """Tseitin-encode a copy of `nl`; returns net id -> literal.

        ``bind`` pre-assigns literals to nets (used to share primary inputs
        or key variables between copies).
        """
        lit: Dict[int, int] = dict(bind) if bind else {}
        for i in list(nl.primary_inputs) + list(nl.key_inputs):
            if i not in lit:
                lit[i] = self.new_var()
        for g in nl.gates:
            ins = [lit[i] for i in g.inputs]
            if g.kind is GateKind.BUF:
                lit[g.output] = ins[0]
                continue
            if g.kind is GateKind.NOT:
                lit[g.output] = -ins[0]
                continue
            key = None
            if cache is not None:
                key = (g.kind, tuple(sorted(ins)))
                hit = cache.get(key)
                if hit is not None:
                    lit[g.output] = hit
                    continue
            y = self.new_var()
            self._encode_gate(g.kind, ins, y)
            lit[g.output] = y
            if cache is not None:
                cache[key] = y
        self.var_maps[tag] = lit
        return lit

    def _encode_gate(self, kind: GateKind, ins: List[int], y: int):
        add = self.clauses.append
        if kind is GateKind.AND:
            for a in ins:
                add([a, -y])
            add([-a for a in ins] + [y])
        elif kind is GateKind.NAND:
            for a in ins:
                add([a, y])
            add([-a for a in ins] + [-y])
        elif kind is GateKind.OR:
            for a in ins:
                add([-a, y])
            add([a for a in ins] + [-y])
        elif kind is GateKind.NOR:
            for a in ins:
                add([-a, -y])
            add([a for a in ins] + [y])
        elif kind is GateKind.XOR or kind is GateKind.XNOR:
            a, b = ins
            if kind is GateKind.XNOR:
                y = -y
            add([-a, -b, -y])
            add([a, b, -y])
            add([a, -b, y])
            add([-a, b, y])
        else:  # pragma: no cover
            raise CnfError(f"cannot encode {kind}")

    def add_equals_const(self, literal: int, value: int):
        self.add_clause([literal if value else -literal])


def tseitin(nl: Netlist, copy_tag: str = "c0") -> CnfFormula:
    """Standalone Tseitin encoding of one netlist copy."""
    f = CnfFormula()
    f.add_netlist(nl, copy_tag)
    return f


def to_dimacs(f: CnfFormula) -> str:
    lines = [f"p cnf {f.num_vars} {len(f.clauses)}"]
    for c in f.clauses:
        lines.append(" ".join(str(l) for l in c) + " 0")
    return "\n".join(lines) + "\n"


def lit_value(model: Sequence[int], lit: int) -> int:
    v = model[abs(lit) - 1]
    return v if lit > 0 else v ^ 1


# ---------------------------------------------------------------------------
# CDCL solver


class CdclSolver:
    """Incremental CDCL with two watched literals and 1-UIP learning.

    Deterministic: decisions take the lowest unassigned variable, false
    first.  Clauses can be added between `solve` calls; learned clauses are
    kept (sound because clauses are never removed).
    """

    def __init__(self, num_vars: int = 0):
        self.num_vars = 0
        self.clauses: List[List[int]] = []
        self.assign: List[int] = [-1]  # index by var, -1 unassigned
        self.level: List[int] = [0]
        self.reason: List[Optional[int]] = [None]
        self.watches: Dict[int, List[int]] = {}
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.qhead = 0
        self.unsat = False
        self.ensure_vars(num_vars)

    # -- infrastructure ----------------------------------------------------
    def ensure_vars(self, n: int):
        while self.num_vars < n:
            self.num_vars += 1
            self.assign.append(-1)
            self.level.append(0)
            self.reason.append(None)
            self.watches[self.num_vars] = []
            self.watches[-self.num_vars] = []

    def value(self, lit: int) -> int:
        v = self.assign[abs(lit)]
        if v < 0:
            return -1
        return v if lit > 0 else v ^ 1

    @property
    def decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, lit: int, reason: Optional[int]):
        var = abs(lit)
        self.assign[var] = 1 if lit > 0 else 0
        self.level[var] = self.decision_level
        self.reason[var] = reason
        self.trail.append(lit)

    def backtrack(self, lvl: int):
        if self.decision_level <= lvl:
            return
        limit = self.trail_lim[lvl]
        for lit in reversed(self.trail[limit:]):
            self.assign[abs(lit)] = -1
            self.reason[abs(lit)] = None
        del self.trail[limit:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def add_clause(self, lits: Sequence[int]):
        self.backtrack(0)
        clause = []
        for lit in lits:
            self.ensure_vars(abs(lit))
            if lit not in clause:
                clause.append(lit)
        if any(-l in clause for l in clause):
            return  # tautology
        # drop literals already false at level 0; satisfied clauses are kept
        if not any(self.value(l) == 1 for l in clause):
            clause = [l for l in clause if self.value(l) != 0]
        if not clause:
            self.unsat = True
            return
        if len(clause) == 1:
            if self.value(clause[0]) == -1:
                self._enqueue(clause[0], None)
                if self._propagate() is not None:
                    self.unsat = True
            return
        ci = len(self.clauses)
        self.clauses.append(clause)
        self.watches[clause[0]].append(ci)
        self.watches[clause[1]].append(ci)

    # -- search ------------------------------------------------------------
    def _propagate(self) -> Optional[int]:
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            neg = -lit
            watchlist = self.watches[neg]
            i = 0
            while i < len(watchlist):
                ci = watchlist[i]
                clause = self.clauses[ci]
                if clause[0] == neg:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self.value(first) == 1:
                    i += 1
                    continue
                moved = False
                for j in range(2, len(clause)):
                    if self.value(clause[j]) != 0:
                        clause[1], clause[j] = clause[j], clause[1]
                        self.watches[clause[1]].append(ci)
                        watchlist[i] = watchlist[-1]
                        watchlist.pop()
                        moved = True
                        break
                if moved:
                    continue
                if self.value(first) == 0:
                    return ci  # conflict
                self._enqueue(first, ci)
                i += 1
        return None

    def _analyze(self, confl: int) -> Tuple[List[int], int]:
        learnt: List[int] = []
        seen = [False] * (self.num_vars + 1)
        counter = 0
        p = None  # asserted literal currently being resolved on
        idx = len(self.trail) - 1
        clause = self.clauses[confl]
        while True:
            for q in clause:
                if p is not None and q == p:
                    continue
                var = abs(q)
                if not seen[var] and self.level[var] > 0:
                    seen[var] = True
                    if self.level[var] == self.decision_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self.trail[idx])]:
                idx -= 1
            p = self.trail[idx]
            var = abs(p)
            seen[var] = False
            counter -= 1
            idx -= 1
            if counter == 0:
                break
            clause = self.clauses[self.reason[var]]
        learnt.insert(0, -p)
        if len(learnt) == 1:
            return learnt, 0
        bl = max(self.level[abs(q)] for q in learnt[1:])
        return learnt, bl

    def _record_learnt(self, learnt: List[int]):
        if len(learnt) == 1:
            self._enqueue(learnt[0], None)
            return
        # put a highest-level literal (other than the asserting one) in watch 1
        ml = 1
        for j in range(2, len(learnt)):
            if self.level[abs(learnt[j])] > self.level[abs(learnt[ml])]:
                ml = j
        learnt[1], learnt[ml] = learnt[ml], learnt[1]
        ci = len(self.clauses)
        self.clauses.append(learnt)
        self.watches[learnt[0]].append(ci)
        self.watches[learnt[1]].append(ci)
        self._enqueue(learnt[0], ci)

    def solve(self, assumptions: Sequence[int] = ()) -> SatResult:
        if self.unsat:
            return SatResult(SatStatus.UNSAT, None)
        self.backtrack(0)
        assumptions = list(assumptions)
        for lit in assumptions:
            self.ensure_vars(abs(lit))
        next_var = 1

        while True:
            confl = self._propagate()
            if confl is not None:
                if self.decision_level == 0:
                    self.unsat = True
                    return SatResult(SatStatus.UNSAT, None)
                learnt, bl = self._analyze(confl)
                self.backtrack(bl)
                self._record_learnt(learnt)
                next_var = 1
                continue

            if self.decision_level < len(assumptions):
                a = assumptions[self.decision_level]
                v = self.value(a)
                if v == 0:
                    return SatResult(SatStatus.UNSAT, None)  # unsat under assumptions
                self.trail_lim.append(len(self.trail))
                if v == -1:
                    self._enqueue(a, None)
                continue

            while next_var <= self.num_vars and self.assign[next_var] >= 0:
                next_var += 1
            if next_var > self.num_vars:
                model = tuple(self.assign[v] for v in range(1, self.num_vars + 1))
                self._check_model(model)
                return SatResult(SatStatus.SAT, model)
            self.trail_lim.append(len(self.trail))
            self._enqueue(-next_var, None)  # false first

    def _check_model(self, model: Tuple[int, ...]):
        for clause in self.clauses:
            if not any(lit_value(model, l) for l in clause):
                raise AssertionError("solver produced a model violating a clause")


def solve(f: CnfFormula, assumptions: Sequence[int] = ()) -> SatResult:
    """Decide a formula from scratch; UNSAT is a result, not an error."""
    s = CdclSolver(f.num_vars)
    for c in f.clauses:
        s.add_clause(c)
    return s.solve(assumptions)


# ---------------------------------------------------------------------------
# Equivalence checking


@dataclass
class EquivalenceResult:
    equivalent: bool
    counterexample: Optional[Tuple[int, ...]]  # bits in `a`'s PI order


def _paired(a: Netlist, b: Netlist, what: str, a_ids, b_ids) -> List[Tuple[int, int]]:
    a_names = [a.names[i] for i in a_ids]
    b_names = {b.names[i]: i for i in b_ids}
    if len(a_ids) != len(b_ids) or set(a_names) != set(b_names):
        raise ValueError(f"{what} mismatch between circuits")
    return [(i, b_names[a.names[i]]) for i in a_ids]


def miter_equivalence(a: Netlist, b: Netlist) -> EquivalenceResult:
    """SAT-based combinational equivalence via an XOR-of-outputs miter.

    Inputs/outputs are paired by name.  Neither circuit may have key inputs
    (substitute constants first).  A SAT answer is re-verified by simulation
    before being reported as a counterexample.
    """
    if a.key_inputs or b.key_inputs:
        raise ValueError("fix key inputs to constants before equivalence checking")
    pi_pairs = _paired(a, b, "primary input", a.primary_inputs, b.primary_inputs)
    po_pairs = _paired(a, b, "primary output", a.primary_outputs, b.primary_outputs)

    f = CnfFormula()
    cache: dict = {}
    ma = f.add_netlist(a, "a", cache=cache)
    bind = {bi: ma[ai] for ai, bi in pi_pairs}
    mb = f.add_netlist(b, "b", bind=bind, cache=cache)

    diffs = []
    for ao, bo in po_pairs:
        la, lb = ma[ao], mb[bo]
        if la == lb:
            continue
        d = f.new_var()
        f._encode_gate(GateKind.XOR, [la, lb], d)
        diffs.append(d)
    if not diffs:
        return EquivalenceResult(True, None)
    f.add_clause(diffs)

    res = solve(f)
    if not res.is_sat:
        return EquivalenceResult(True, None)
    x = tuple(lit_value(res.model, ma[ai]) for ai, _ in pi_pairs)
    ya = simulate(a, x)
    xb = {b.names[bi]: lit_value(res.model, ma[ai]) for ai, bi in pi_pairs}
    yb = simulate(b, tuple(xb[b.names[i]] for i in b.primary_inputs))
    po_b = {b.names[o]: v for o, v in zip(b.primary_outputs, yb)}
    mismatch = any(va != po_b[a.names[ao]] for (ao, _), va in zip(po_pairs, ya))
    if not mismatch:
        raise AssertionError("miter counterexample failed simulation re-check")
    return EquivalenceResult(False, x)


def exhaustive_equivalence(a: Netlist, b: Netlist) -> EquivalenceResult:
    """Word-parallel exhaustive comparison; only for <= 16 primary inputs."""
    if a.key_inputs or b.key_inputs:
        raise ValueError("fix key inputs to constants before equivalence checking")
    pi_pairs = _paired(a, b, "primary input", a.primary_inputs, b.primary_inputs)
    po_pairs = _paired(a, b, "primary output", a.primary_outputs, b.primary_outputs)
    v = len(pi_pairs)
    if v > 16:
        raise ValueError("too many inputs for exhaustive comparison")
    words = pattern_words(v)
    mask = full_mask(v)
    va = eval_nets(a, {ai: w for (ai, _), w in zip(pi_pairs, words)}, mask)
    vb = eval_nets(b, {bi: w for (_, bi), w in zip(pi_pairs, words)}, mask)
    diff = 0
    for ao, bo in po_pairs:
        diff |= va[ao] ^ vb[bo]
    if not diff:
        return EquivalenceResult(True, None)
    p = (diff & -diff).bit_length() - 1
    x = tuple((p >> (v - 1 - i)) & 1 for i in range(v))
    return EquivalenceResult(False, x)


def circuits_equivalent(a: Netlist, b: Netlist) -> EquivalenceResult:
    """Exhaustive when feasible, SAT miter otherwise."""
    if len(a.primary_inputs) <= 16:
        return exhaustive_equivalence(a, b)
    return miter_equivalence(a, b)
