"""Truth tables with don't-cares, exact two-level minimization, and SOP
synthesis back into gate networks.

Tables index minterms with the first variable as the most significant bit,
so entry ``i`` is the function value at the pattern whose bits spell ``i``.
Minimization is Quine-McCluskey prime generation followed by an exact
branch-and-bound cover search (greedy set cover above 8 variables).  Ties
are broken toward fewer total literals, then the lexicographically smallest
cube list, so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .bench import (
    GateKind,
    Netlist,
    NetlistBuilder,
    _eval_gate,
    eval_nets,
    full_mask,
    pattern_words,
)

ZERO, ONE, DC = 0, 1, 2

# cube literal values: 0, 1, or DASH (absent)
DASH = 2

Cube = Tuple[int, ...]


class TableError(Exception):
    pass


@dataclass(frozen=True)
class TruthTable:
    """Multi-output function over <= 16 ordered variables."""

    num_vars: int
    outputs: Tuple[Tuple[int, ...], ...]  # per output, 2^num_vars entries

    def __post_init__(self):
        if self.num_vars > 16:
            raise TableError("tables support at most 16 variables")
        size = 1 << self.num_vars
        for col in self.outputs:
            if len(col) != size:
                raise TableError(f"output column must have {size} entries")
            if any(v not in (ZERO, ONE, DC) for v in col):
                raise TableError("entries must be 0, 1, or don't-care")

    @property
    def num_outputs(self) -> int:
        return len(self.outputs)

    def value(self, output: int, idx: int) -> int:
        return self.outputs[output][idx]

    def depends_on(self, var: int, output: Optional[int] = None) -> bool:
        """True if some (or the given) output differs on a pair of patterns
        that differ only in `var`.  Don't-care entries never witness
        dependence."""
        mask = 1 << (self.num_vars - 1 - var)
        cols = self.outputs if output is None else (self.outputs[output],)
        for col in cols:
            for i in range(1 << self.num_vars):
                if i & mask:
                    continue
                a, b = col[i], col[i | mask]
                if a != b and a != DC and b != DC:
                    return True
        return False


def cube_covers(cube: Cube, minterm: int, num_vars: int) -> bool:
    for i, lit in enumerate(cube):
        if lit == DASH:
            continue
        if ((minterm >> (num_vars - 1 - i)) & 1) != lit:
            return False
    return True


def cube_literals(cube: Cube) -> int:
    return sum(1 for lit in cube if lit != DASH)


def cube_minterms(cube: Cube, num_vars: int) -> Iterable[int]:
    free = [i for i, lit in enumerate(cube) if lit == DASH]
    base = 0
    for i, lit in enumerate(cube):
        if lit == ONE:
            base |= 1 << (num_vars - 1 - i)
    for bits in range(1 << len(free)):
        m = base
        for j, i in enumerate(free):
            if (bits >> j) & 1:
                m |= 1 << (num_vars - 1 - i)
        yield m


@dataclass(frozen=True)
class SopCover:
    num_vars: int
    cubes: Tuple[Cube, ...]

    def support(self) -> Set[int]:
        used = set()
        for cube in self.cubes:
            for i, lit in enumerate(cube):
                if lit != DASH:
                    used.add(i)
        return used

    def evaluate(self, minterm: int) -> int:
        return int(any(cube_covers(c, minterm, self.num_vars) for c in self.cubes))


@dataclass(frozen=True)
class Cost:
    cubes: int
    literals: int


def cost(cover: SopCover) -> Cost:
    return Cost(len(cover.cubes), sum(cube_literals(c) for c in cover.cubes))


# ---------------------------------------------------------------------------
# Table extraction from a netlist

def table_of_netlist(nl: Netlist, outputs: Sequence[int], support: Sequence[int]) -> TruthTable:
    """Exact truth table of `outputs` as functions of the `support` nets.

    The support may include internal nets: their drivers are ignored and
    they are treated as free variables.  Every cone leaf reached from an
    output without crossing the support must be a support net, otherwise the
    function is not total over the support and an error is raised.
    """
    v = len(support)
    if v > 16:
        raise TableError("support too large (max 16 nets)")
    support_set = set(support)
    cone_gates = []
    seen = set(support)
    stack = list(outputs)
    gate_of = {g.output: gi for gi, g in enumerate(nl.gates)}
    needed = set()
    while stack:
        n = stack.pop()
        if n in support_set or n in needed:
            continue
        gi = gate_of.get(n)
        if gi is None:
            raise TableError(
                f"output depends on net '{nl.names[n]}' outside the support"
            )
        needed.add(n)
        for i in nl.gates[gi].inputs:
            if i not in support_set and i not in needed:
                stack.append(i)
    order = [gi for gi, g in enumerate(nl.gates) if g.output in needed]

    words = pattern_words(v)
    mask = full_mask(v)
    vals = [0] * nl.num_nets
    for net, w in zip(support, words):
        vals[net] = w
    for gi in order:
        g = nl.gates[gi]
        vals[g.output] = _eval_gate(g.kind, [vals[i] for i in g.inputs], mask)
    cols = []
    for o in outputs:
        w = vals[o]
        cols.append(tuple((w >> p) & 1 for p in range(1 << v)))
    return TruthTable(v, tuple(cols))


# ---------------------------------------------------------------------------
# Quine-McCluskey

def prime_implicants(num_vars: int, onset: Set[int], dcset: Set[int]) -> List[Cube]:
    """All prime implicants of onset∪dcset that cover at least one On minterm."""
    care = onset | dcset
    if not care:
        return []
    current: Set[Cube] = set()
    for m in care:
        current.add(tuple((m >> (num_vars - 1 - i)) & 1 for i in range(num_vars)))
    primes: Set[Cube] = set()
    while current:
        merged: Set[Cube] = set()
        used: Set[Cube] = set()
        by_ones: Dict[int, List[Cube]] = {}
        for c in current:
            by_ones.setdefault(sum(1 for x in c if x == ONE), []).append(c)
        for ones, group in sorted(by_ones.items()):
            for c in group:
                for other in by_ones.get(ones + 1, ()):
                    diff = None
                    for i in range(num_vars):
                        if c[i] != other[i]:
                            if c[i] == DASH or other[i] == DASH or diff is not None:
                                diff = -1
                                break
                            diff = i
                    if diff is None or diff == -1:
                        continue
                    m = tuple(DASH if i == diff else c[i] for i in range(num_vars))
                    merged.add(m)
                    used.add(c)
                    used.add(other)
        primes.update(c for c in current if c not in used)
        current = merged
    return sorted(p for p in primes if any(m in onset for m in cube_minterms(p, num_vars)))


def _exact_cover(num_vars: int, onset: List[int], primes: List[Cube]) -> List[Cube]:
    """Minimum-cube cover; ties by literal count then lexicographic cube list."""
    cover_sets = [frozenset(m for m in cube_minterms(p, num_vars) if m in set(onset)) for p in primes]
    onset_set = set(onset)
    covering: Dict[int, List[int]] = {m: [] for m in onset}
    for pi, ms in enumerate(cover_sets):
        for m in ms:
            covering[m].append(pi)

    best: List[Optional[Tuple[int, int, Tuple[Cube, ...]]]] = [None]

    def consider(chosen: List[int]):
        cubes = tuple(sorted(primes[i] for i in chosen))
        lits = sum(cube_literals(c) for c in cubes)
        cand = (len(cubes), lits, cubes)
        if best[0] is None or cand < best[0]:
            best[0] = cand

    def search(uncovered: Set[int], chosen: List[int]):
        if best[0] is not None and len(chosen) > best[0][0]:
            return
        if not uncovered:
            consider(chosen)
            return
        if best[0] is not None and len(chosen) == best[0][0]:
            return
        # branch on the uncovered minterm with the fewest covering primes
        m = min(uncovered, key=lambda t: (len(covering[t]), t))
        for pi in covering[m]:
            chosen.append(pi)
            search(uncovered - cover_sets[pi], chosen)
            chosen.pop()

    search(set(onset_set), [])
    assert best[0] is not None, "onset minterm not covered by any prime"
    return list(best[0][2])


def _greedy_cover(num_vars: int, onset: List[int], primes: List[Cube]) -> List[Cube]:
    onset_set = set(onset)
    cover_sets = [set(m for m in cube_minterms(p, num_vars) if m in onset_set) for p in primes]
    chosen: List[int] = []
    uncovered = set(onset_set)
    while uncovered:
        bi = min(
            range(len(primes)),
            key=lambda i: (-len(cover_sets[i] & uncovered), cube_literals(primes[i]), primes[i]),
        )
        if not cover_sets[bi] & uncovered:
            raise AssertionError("greedy cover stalled")
        chosen.append(bi)
        uncovered -= cover_sets[bi]
    return sorted(primes[i] for i in chosen)


def minimize(tt: TruthTable, output_index: int) -> SopCover:
    """Two-level SOP minimization honoring don't-cares.

    Exact (minimum cubes, then minimum literals) for up to 8 variables,
    greedy set cover above that.  The empty On-set yields an empty cover.
    """
    col = tt.outputs[output_index]
    onset = {i for i, x in enumerate(col) if x == ONE}
    dcset = {i for i, x in enumerate(col) if x == DC}
    if not onset:
        return SopCover(tt.num_vars, ())
    primes = prime_implicants(tt.num_vars, onset, dcset)
    onset_list = sorted(onset)
    if tt.num_vars <= 8:
        cubes = _exact_cover(tt.num_vars, onset_list, primes)
    else:
        cubes = _greedy_cover(tt.num_vars, onset_list, primes)
    return SopCover(tt.num_vars, tuple(sorted(cubes)))


# ---------------------------------------------------------------------------
# SOP -> netlist

def netlist_of_sop(
    covers: Sequence[SopCover],
    var_names: Sequence[str],
    output_names: Optional[Sequence[str]] = None,
    key_vars: int = 0,
) -> Netlist:
    """AND-OR (plus NOT) network computing the covers.

    The first `key_vars` variables are declared as key inputs.  Constant
    covers (empty, or a single all-dash cube) fall back to a two-literal
    AND/OR gadget over the first variable since the gate vocabulary has no
    constants.
    """
    if output_names is None:
        output_names = [f"f{i}" for i in range(len(covers))]
    b = NetlistBuilder()
    for i, name in enumerate(var_names):
        b.add_input(name, key=i < key_vars)
    build_sop_into(b, covers, var_names, output_names)
    for name in output_names:
        b.add_output(name)
    return b.build()


def build_sop_into(
    b: NetlistBuilder,
    covers: Sequence[SopCover],
    var_names: Sequence[str],
    output_names: Sequence[str],
) -> None:
    """Emit SOP gates into an existing builder (inputs must already exist)."""
    nots: Dict[int, str] = {}

    def lit_net(var: int, positive: bool) -> str:
        if positive:
            return var_names[var]
        if var not in nots:
            n = b.fresh(f"n_{var_names[var]}")
            b.add_gate(GateKind.NOT, [var_names[var]], n)
            nots[var] = n
        return nots[var]

    for cover, out in zip(covers, output_names):
        if not cover.cubes:  # constant 0
            z = lit_net(0, False)
            b.add_gate(GateKind.AND, [var_names[0], z], out)
            continue
        terms: List[str] = []
        for ci, cube in enumerate(cover.cubes):
            lits = [(i, v) for i, v in enumerate(cube) if v != DASH]
            if not lits:  # all-dash: constant 1
                terms = None
                break
            nets = [lit_net(i, v == ONE) for i, v in lits]
            if len(nets) == 1:
                terms.append(nets[0])
            else:
                if len(cover.cubes) == 1:
                    b.add_gate(GateKind.AND, nets, out)
                    terms.append(out)
                else:
                    t = b.fresh(f"{out}_t{ci}")
                    b.add_gate(GateKind.AND, nets, t)
                    terms.append(t)
        if terms is None:  # constant 1
            z = lit_net(0, False)
            b.add_gate(GateKind.OR, [var_names[0], z], out)
            continue
        if len(terms) == 1:
            if terms[0] != out:
                b.add_gate(GateKind.BUF, [terms[0]], out)
            continue
        b.add_gate(GateKind.OR, terms, out)


def sop_literal_pins(nl: Netlist, var_names: Sequence[str]) -> int:
    """Count gate input pins wired to a variable or its inverter output."""
    var_ids = {nl.id_of(n) for n in var_names if n in nl._name_to_id}
    lit_nets = set(var_ids)
    for g in nl.gates:
        if g.kind is GateKind.NOT and g.inputs[0] in var_ids:
            lit_nets.add(g.output)
    pins = 0
    for g in nl.gates:
        if g.kind is GateKind.NOT and g.inputs[0] in var_ids:
            continue
        pins += sum(1 for i in g.inputs if i in lit_nets)
    return pins


def pla_text(tt: TruthTable, covers: Optional[Sequence[SopCover]] = None) -> str:
    """Debug dump in PLA-like text; not a load format."""
    if covers is None:
        covers = [minimize(tt, o) for o in range(tt.num_outputs)]
    lines = [f".i {tt.num_vars}", f".o {len(covers)}"]
    total = sum(len(c.cubes) for c in covers)
    lines.append(f".p {total}")
    sym = {0: "0", 1: "1", DASH: "-"}
    for oi, cover in enumerate(covers):
        outbits = ["0"] * len(covers)
        outbits[oi] = "1"
        for cube in cover.cubes:
            lines.append("".join(sym[v] for v in cube) + " " + "".join(outbits))
    lines.append(".e")
    return "\n".join(lines) + "\n"
