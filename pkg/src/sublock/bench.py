"""Gate-level combinational netlists in ISCAS `.bench` format.

The netlist IR is deliberately small: named nets with dense integer ids,
n-ary AND/NAND/OR/NOR gates, strictly binary XOR/XNOR, and unary NOT/BUF.
`DFF` lines are accepted and split into a pseudo primary output (the D pin)
and a pseudo primary input (the Q net), which is the usual way to run
combinational analyses on scan designs.  Nets whose name starts with
``keyinput`` are classified as key inputs rather than primary inputs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple


class BenchError(Exception):
    """Base class for netlist construction and parse failures."""


class BenchSyntaxError(BenchError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {msg}")
        self.line = line
        self.col = col


class UndefinedNetError(BenchError):
    def __init__(self, name: str, line: Optional[int] = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"reference to undefined net '{name}'{where}")
        self.name = name


class DuplicateNetError(BenchError):
    def __init__(self, name: str, line: Optional[int] = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"net '{name}' defined more than once{where}")
        self.name = name


class CycleError(BenchError):
    def __init__(self, nets: Sequence[str]):
        super().__init__(f"combinational cycle through: {', '.join(nets)}")
        self.nets = tuple(nets)


class GateKind(Enum):
    AND = "AND"
    NAND = "NAND"
    OR = "OR"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    NOT = "NOT"
    BUF = "BUF"


_UNARY = (GateKind.NOT, GateKind.BUF)
_BINARY_ONLY = (GateKind.XOR, GateKind.XNOR)

KEY_PREFIX = "keyinput"


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    inputs: Tuple[int, ...]
    output: int


@dataclass
class Netlist:
    """Immutable-by-convention combinational netlist.

    Net ids are contiguous 0..N-1; ``names[i]`` is the unique name of net i.
    ``gates`` is topologically ordered: a gate only reads nets defined by
    inputs or by earlier gates.
    """

    names: Tuple[str, ...]
    primary_inputs: Tuple[int, ...]
    key_inputs: Tuple[int, ...]
    primary_outputs: Tuple[int, ...]
    gates: Tuple[Gate, ...]
    _name_to_id: Dict[str, int] = field(default=None, repr=False, compare=False)
    _driver: Dict[int, Gate] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._name_to_id is None:
            object.__setattr__(self, "_name_to_id", {n: i for i, n in enumerate(self.names)})
        if self._driver is None:
            object.__setattr__(self, "_driver", {g.output: g for g in self.gates})

    # -- queries ---------------------------------------------------------
    @property
    def num_nets(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int:
        try:
            return self._name_to_id[name]
        except KeyError:
            raise UndefinedNetError(name) from None

    def name_of(self, net: int) -> str:
        return self.names[net]

    def driver(self, net: int) -> Optional[Gate]:
        return self._driver.get(net)

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    @property
    def literal_count(self) -> int:
        return sum(len(g.inputs) for g in self.gates)

    def depth(self) -> int:
        d = [0] * self.num_nets
        for g in self.gates:
            d[g.output] = 1 + max(d[i] for i in g.inputs)
        if not self.primary_outputs:
            return 0
        return max(d[o] for o in self.primary_outputs)


# ---------------------------------------------------------------------------
# Builder


class NetlistBuilder:
    """Accumulates named inputs/gates/outputs, then topologically sorts."""

    def __init__(self):
        self._inputs: List[Tuple[str, bool]] = []  # (name, is_key)
        self._gates: List[Tuple[GateKind, Tuple[str, ...], str]] = []
        self._outputs: List[str] = []
        self._defined: Dict[str, int] = {}  # name -> defining entry marker
        self._reserved: set = set()

    def is_defined(self, name: str) -> bool:
        return name in self._defined

    def reserve(self, names: Iterable[str]):
        """Keep `fresh` from handing out any of these names."""
        self._reserved.update(names)

    def add_input(self, name: str, key: Optional[bool] = None):
        if name in self._defined:
            raise DuplicateNetError(name)
        self._defined[name] = 1
        self._reserved.add(name)
        if key is None:
            key = name.startswith(KEY_PREFIX)
        self._inputs.append((name, key))

    def add_gate(self, kind: GateKind, inputs: Sequence[str], output: str):
        inputs = tuple(inputs)
        if kind in _UNARY:
            if len(inputs) != 1:
                raise BenchError(f"{kind.value} takes exactly 1 input, got {len(inputs)}")
        elif len(inputs) < 2:
            raise BenchError(f"{kind.value} needs at least 2 inputs, got {len(inputs)}")
        if kind in _BINARY_ONLY and len(inputs) > 2:
            # widen via a left-to-right binary chain
            cur = inputs[0]
            for k, nxt in enumerate(inputs[1:-1]):
                t = self.fresh(f"{output}_x{k}")
                self._push_gate(kind, (cur, nxt), t)
                cur = t
            self._push_gate(kind, (cur, inputs[-1]), output)
            return
        self._push_gate(kind, inputs, output)

    def _push_gate(self, kind: GateKind, inputs: Tuple[str, ...], output: str):
        if output in self._defined:
            raise DuplicateNetError(output)
        self._defined[output] = 1
        self._reserved.add(output)
        self._reserved.update(inputs)
        self._gates.append((kind, inputs, output))

    def add_output(self, name: str):
        self._outputs.append(name)
        self._reserved.add(name)

    def fresh(self, base: str) -> str:
        if base not in self._reserved and base not in self._defined:
            self._reserved.add(base)
            return base
        i = 0
        while f"{base}_{i}" in self._reserved:
            i += 1
        name = f"{base}_{i}"
        self._reserved.add(name)
        return name

    def build(self) -> Netlist:
        for kind, ins, out in self._gates:
            for n in ins:
                if n not in self._defined:
                    raise UndefinedNetError(n)
        for n in self._outputs:
            if n not in self._defined:
                raise UndefinedNetError(n)

        # topological sort of gates, stable in insertion order
        out_to_idx = {out: i for i, (_, _, out) in enumerate(self._gates)}
        nconsumers: List[List[int]] = [[] for _ in self._gates]
        indeg = [0] * len(self._gates)
        for i, (_, ins, _) in enumerate(self._gates):
            for n in ins:
                j = out_to_idx.get(n)
                if j is not None:
                    indeg[i] += 1
                    nconsumers[j].append(i)
        ready = [i for i, d in enumerate(indeg) if d == 0]
        heapq.heapify(ready)
        order: List[int] = []
        while ready:
            i = heapq.heappop(ready)
            order.append(i)
            for j in nconsumers[i]:
                indeg[j] -= 1
                if indeg[j] == 0:
                    heapq.heappush(ready, j)
        if len(order) != len(self._gates):
            stuck = [self._gates[i][2] for i in range(len(self._gates)) if indeg[i] > 0]
            raise CycleError(stuck[:8])

        names: List[str] = []
        ids: Dict[str, int] = {}
        pis: List[int] = []
        keys: List[int] = []
        for name, is_key in self._inputs:
            ids[name] = len(names)
            names.append(name)
            (keys if is_key else pis).append(ids[name])
        for i in order:
            out = self._gates[i][2]
            ids[out] = len(names)
            names.append(out)
        gates = tuple(
            Gate(self._gates[i][0], tuple(ids[n] for n in self._gates[i][1]), ids[self._gates[i][2]])
            for i in order
        )
        pos = tuple(ids[n] for n in self._outputs)
        return Netlist(tuple(names), tuple(pis), tuple(keys), pos, gates)


# ---------------------------------------------------------------------------
# Parsing / emission

_NAME_STOP = set(" \t\r(),=#")


def _scan_name(s: str, i: int) -> Tuple[str, int]:
    j = i
    while j < len(s) and s[j] not in _NAME_STOP:
        j += 1
    return s[i:j], j


def _skip_ws(s: str, i: int) -> int:
    while i < len(s) and s[i] in " \t\r":
        i += 1
    return i


def parse_bench(text: str) -> Netlist:
    """Parse `.bench` text into a Netlist.

    Grammar per line: ``INPUT(x)``, ``OUTPUT(x)``, ``y = GATE(a, b, ...)``,
    ``#`` comments, blank lines.  ``q = DFF(d)`` turns q into a pseudo
    primary input and d into a pseudo primary output.  XOR/XNOR with more
    than two operands are expanded into binary chains.  BUFF is accepted as
    an alias of BUF.
    """
    builder = NetlistBuilder()
    input_lines: List[Tuple[str, int]] = []
    output_lines: List[Tuple[str, int]] = []
    gate_lines: List[Tuple[str, str, Tuple[str, ...], int]] = []
    dff_lines: List[Tuple[str, str, int]] = []

    def syntax(msg: str, lineno: int, col: int):
        raise BenchSyntaxError(msg, lineno, col + 1)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        i = _skip_ws(line, 0)
        if i >= len(line):
            continue
        name, i = _scan_name(line, i)
        if not name:
            syntax(f"unexpected character {line[i]!r}", lineno, i)
        i = _skip_ws(line, i)
        if i < len(line) and line[i] == "(":
            kw = name.upper()
            if kw not in ("INPUT", "OUTPUT"):
                syntax(f"expected INPUT or OUTPUT before '(', got {name!r}", lineno, i)
            i = _skip_ws(line, i + 1)
            arg, i = _scan_name(line, i)
            if not arg:
                syntax("expected net name", lineno, i)
            i = _skip_ws(line, i)
            if i >= len(line) or line[i] != ")":
                syntax("expected ')'", lineno, i)
            i = _skip_ws(line, i + 1)
            if i < len(line):
                syntax(f"trailing text {line[i:].strip()!r}", lineno, i)
            (input_lines if kw == "INPUT" else output_lines).append((arg, lineno))
        elif i < len(line) and line[i] == "=":
            i = _skip_ws(line, i + 1)
            kindname, i = _scan_name(line, i)
            if not kindname:
                syntax("expected gate type after '='", lineno, i)
            i = _skip_ws(line, i)
            if i >= len(line) or line[i] != "(":
                syntax("expected '(' after gate type", lineno, i)
            args: List[str] = []
            i += 1
            while True:
                i = _skip_ws(line, i)
                arg, i = _scan_name(line, i)
                if not arg:
                    syntax("expected net name", lineno, i)
                args.append(arg)
                i = _skip_ws(line, i)
                if i < len(line) and line[i] == ",":
                    i += 1
                    continue
                if i < len(line) and line[i] == ")":
                    i += 1
                    break
                syntax("expected ',' or ')'", lineno, i)
            i = _skip_ws(line, i)
            if i < len(line):
                syntax(f"trailing text {line[i:].strip()!r}", lineno, i)
            gate_lines.append((name, kindname.upper(), tuple(args), lineno))
        else:
            syntax("expected '(' or '='", lineno, i)

    for q, kind, args, lineno in list(gate_lines):
        if kind == "DFF":
            if len(args) != 1:
                raise BenchSyntaxError("DFF takes exactly 1 input", lineno, 1)
            dff_lines.append((q, args[0], lineno))
    gate_lines = [g for g in gate_lines if g[1] != "DFF"]

    try:
        for name, lineno in input_lines:
            try:
                builder.add_input(name)
            except DuplicateNetError:
                raise DuplicateNetError(name, lineno) from None
        for q, _d, lineno in dff_lines:
            try:
                builder.add_input(q)  # flip-flop output becomes a pseudo-PI
            except DuplicateNetError:
                raise DuplicateNetError(q, lineno) from None
        alias = {"BUFF": "BUF"}
        for out, kindname, args, lineno in gate_lines:
            kindname = alias.get(kindname, kindname)
            try:
                kind = GateKind[kindname]
            except KeyError:
                raise BenchSyntaxError(f"unknown gate type {kindname!r}", lineno, 1) from None
            try:
                builder.add_gate(kind, args, out)
            except DuplicateNetError:
                raise DuplicateNetError(out, lineno) from None
            except BenchError as e:
                if isinstance(e, (UndefinedNetError, CycleError)):
                    raise
                raise BenchSyntaxError(str(e), lineno, 1) from None
        for name, lineno in output_lines:
            if not builder.is_defined(name):
                raise UndefinedNetError(name, lineno)
            builder.add_output(name)
        for _q, d, lineno in dff_lines:
            if not builder.is_defined(d):
                raise UndefinedNetError(d, lineno)
            builder.add_output(d)  # flip-flop input becomes a pseudo-PO
        defined_ok = builder._defined
        for out, _kind, args, lineno in gate_lines:
            for a in args:
                if a not in defined_ok:
                    raise UndefinedNetError(a, lineno)
        return builder.build()
    except BenchError:
        raise


def emit_bench(nl: Netlist) -> str:
    """Emit `.bench` text that reparses to a structurally identical netlist."""
    lines: List[str] = []
    for i in nl.primary_inputs:
        lines.append(f"INPUT({nl.names[i]})")
    for i in nl.key_inputs:
        lines.append(f"INPUT({nl.names[i]})")
    for o in nl.primary_outputs:
        lines.append(f"OUTPUT({nl.names[o]})")
    for g in nl.gates:
        args = ", ".join(nl.names[i] for i in g.inputs)
        lines.append(f"{nl.names[g.output]} = {g.kind.value}({args})")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Simulation

def _eval_gate(kind: GateKind, ins: List[int], mask: int) -> int:
    if kind is GateKind.AND or kind is GateKind.NAND:
        v = mask
        for a in ins:
            v &= a
        return v if kind is GateKind.AND else v ^ mask
    if kind is GateKind.OR or kind is GateKind.NOR:
        v = 0
        for a in ins:
            v |= a
        return v if kind is GateKind.OR else v ^ mask
    if kind is GateKind.XOR or kind is GateKind.XNOR:
        v = 0
        for a in ins:
            v ^= a
        return v if kind is GateKind.XOR else v ^ mask
    if kind is GateKind.NOT:
        return ins[0] ^ mask
    return ins[0]  # BUF


def eval_nets(
    nl: Netlist,
    inputs: Dict[int, int],
    mask: int = 1,
    overrides: Optional[Dict[int, int]] = None,
) -> List[int]:
    """Evaluate every net as a bit-parallel word of `mask`-wide patterns.

    ``inputs`` maps net id to its word.  ``overrides`` forces net values
    after their drivers are evaluated (stuck-at style).  With mask=1 this is
    plain scalar simulation.
    """
    vals = [0] * nl.num_nets
    for i, v in inputs.items():
        vals[i] = v & mask
    if overrides:
        for i, v in overrides.items():
            vals[i] = v & mask
    for g in nl.gates:
        w = _eval_gate(g.kind, [vals[i] for i in g.inputs], mask)
        if overrides is not None and g.output in overrides:
            w = overrides[g.output] & mask
        vals[g.output] = w
    return vals


def simulate(nl: Netlist, pi_values: Sequence[int], key_values: Sequence[int] = ()) -> Tuple[int, ...]:
    """Single-pattern simulation; returns PO values in declaration order."""
    if len(pi_values) != len(nl.primary_inputs):
        raise ValueError(
            f"expected {len(nl.primary_inputs)} primary input values, got {len(pi_values)}"
        )
    if len(key_values) != len(nl.key_inputs):
        raise ValueError(f"expected {len(nl.key_inputs)} key values, got {len(key_values)}")
    inputs = {}
    for i, v in zip(nl.primary_inputs, pi_values):
        inputs[i] = int(v)
    for i, v in zip(nl.key_inputs, key_values):
        inputs[i] = int(v)
    vals = eval_nets(nl, inputs, mask=1)
    return tuple(vals[o] for o in nl.primary_outputs)


def full_mask(v: int) -> int:
    return (1 << (1 << v)) - 1


def pattern_words(v: int) -> List[int]:
    """Words enumerating all 2^v patterns of v variables, MSB-first.

    Bit p of word i equals bit i (counting from the most significant) of the
    pattern index p, so index arithmetic matches truth-table indexing.
    """
    words = []
    total = 1 << v
    for i in range(v):
        h = 1 << (v - 1 - i)
        block = ((1 << h) - 1) << h
        period = 2 * h
        reps = total // period
        word = block * (((1 << (period * reps)) - 1) // ((1 << period) - 1))
        words.append(word)
    return words


def fanin_cone(nl: Netlist, net: int) -> set:
    """Transitive fanin of `net`, including itself; inputs are leaves."""
    if not (0 <= net < nl.num_nets):
        raise UndefinedNetError(str(net))
    seen = {net}
    stack = [net]
    while stack:
        n = stack.pop()
        g = nl.driver(n)
        if g is None:
            continue
        for i in g.inputs:
            if i not in seen:
                seen.add(i)
                stack.append(i)
    return seen


# ---------------------------------------------------------------------------
# Constant substitution

def substitute_constants(nl: Netlist, consts: Dict[int, int]) -> Netlist:
    """Propagate constant net values and rebuild the netlist without them.

    Substituted input nets disappear from the input lists.  A primary output
    that collapses to a constant c is re-materialised as ``XOR(p, p)`` (c=0)
    or ``XNOR(p, p)`` (c=1) over an arbitrary surviving input so the output
    net stays defined.
    """
    value: Dict[int, int] = {net: v & 1 for net, v in consts.items()}
    builder = NetlistBuilder()
    for i in nl.primary_inputs:
        if i not in value:
            builder.add_input(nl.names[i], key=False)
    for i in nl.key_inputs:
        if i not in value:
            builder.add_input(nl.names[i], key=True)

    first_input: Optional[str] = None
    for i in list(nl.primary_inputs) + list(nl.key_inputs):
        if i not in value:
            first_input = nl.names[i]
            break

    for g in nl.gates:
        ins = []
        cbits = []
        for i in g.inputs:
            if i in value:
                cbits.append(value[i])
            else:
                ins.append(i)
        kind = g.kind
        out = g.output
        if kind in (GateKind.AND, GateKind.NAND):
            inv = kind is GateKind.NAND
            if 0 in cbits:
                value[out] = 1 if inv else 0
                continue
            if not ins:
                value[out] = 0 if inv else 1
                continue
            new_kind = kind if len(ins) > 1 else (GateKind.NOT if inv else GateKind.BUF)
        elif kind in (GateKind.OR, GateKind.NOR):
            inv = kind is GateKind.NOR
            if 1 in cbits:
                value[out] = 0 if inv else 1
                continue
            if not ins:
                value[out] = 1 if inv else 0
                continue
            new_kind = kind if len(ins) > 1 else (GateKind.NOT if inv else GateKind.BUF)
        elif kind in (GateKind.XOR, GateKind.XNOR):
            parity = sum(cbits) & 1
            if kind is GateKind.XNOR:
                parity ^= 1
            if not ins:
                value[out] = parity
                continue
            if len(ins) == 1:
                new_kind = GateKind.NOT if parity else GateKind.BUF
            else:
                new_kind = GateKind.XNOR if parity else GateKind.XOR
        elif kind is GateKind.NOT:
            if cbits:
                value[out] = cbits[0] ^ 1
                continue
            new_kind = kind
        else:  # BUF
            if cbits:
                value[out] = cbits[0]
                continue
            new_kind = kind
        builder.add_gate(new_kind, [nl.names[i] for i in ins], nl.names[out])

    for o in nl.primary_outputs:
        if o in value:
            if first_input is None:
                raise BenchError("cannot materialise a constant output with no inputs left")
            kind = GateKind.XNOR if value[o] else GateKind.XOR
            if not builder.is_defined(nl.names[o]):
                builder.add_gate(kind, [first_input, first_input], nl.names[o])
        builder.add_output(nl.names[o])
    return builder.build()
