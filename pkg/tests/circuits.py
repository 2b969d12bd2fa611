"""Seeded random circuit generation used across the test suite."""

import random

from sublock.bench import GateKind, Netlist, NetlistBuilder

_TWO_PLUS = [GateKind.AND, GateKind.NAND, GateKind.OR, GateKind.NOR, GateKind.XOR, GateKind.XNOR]


def random_netlist(seed, n_inputs, n_gates, n_outputs=None, p_not=0.1, p_three=0.15) -> Netlist:
    """Random acyclic netlist with roughly ISCAS-like gate mix.

    Fanin choice is biased to recent nets so the circuit gets real depth.
    When n_outputs is given, sinks are merged or internal nets promoted so
    the output count matches exactly.
    """
    rng = random.Random(seed)
    b = NetlistBuilder()
    nets = []
    consumers = {}
    for i in range(n_inputs):
        name = f"i{i}"
        b.add_input(name)
        nets.append(name)
        consumers[name] = 0

    def pick():
        if rng.random() < 0.75 and len(nets) > n_inputs:
            lo = max(0, len(nets) - 30)
            return nets[rng.randrange(lo, len(nets))]
        return nets[rng.randrange(len(nets))]

    gi = 0

    def add(kind, ins):
        nonlocal gi
        name = f"g{gi}"
        gi += 1
        b.add_gate(kind, ins, name)
        for u in ins:
            consumers[u] += 1
        consumers[name] = 0
        nets.append(name)
        return name

    for _ in range(n_gates):
        if rng.random() < p_not:
            add(GateKind.NOT, [pick()])
            continue
        kind = rng.choice(_TWO_PLUS)
        arity = 2
        if kind not in (GateKind.XOR, GateKind.XNOR) and rng.random() < p_three:
            arity = 3
        ins = []
        while len(ins) < arity:
            c = pick()
            if c not in ins:
                ins.append(c)
        add(kind, ins)

    sinks = [n for n in nets if consumers[n] == 0 and not n.startswith("i")]
    if not sinks:
        sinks = [nets[-1]]
    if n_outputs is not None:
        while len(sinks) > n_outputs:
            a = sinks.pop(rng.randrange(len(sinks)))
            c = sinks.pop(rng.randrange(len(sinks)))
            sinks.append(add(GateKind.OR, [a, c]))
        gate_nets = [n for n in nets if not n.startswith("i")]
        while len(sinks) < n_outputs:
            extra = gate_nets[rng.randrange(len(gate_nets))]
            if extra not in sinks:
                sinks.append(extra)
    for s in sinks:
        b.add_output(s)
    return b.build()


def random_patterns(rng, width):
    """One random 0/1 vector of the given width."""
    return tuple(rng.randrange(2) for _ in range(width))
