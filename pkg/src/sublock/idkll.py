"""Input-dependent key-based locking of small functions.

A lock partitions the 2^v input patterns of a function into m sets and
assigns each set its own valid key sequence.  Under a set's key the locked
network reproduces the original function on that set and complements it on
every other set, so no single key is correct everywhere; the remaining
(unused) key sequences are left as don't-cares or forced to the complement
depending on policy.  The matching lookup memory maps each input pattern to
its set's key and is support-reduced before it is handed to `activate`.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .bench import (
    GateKind,
    Netlist,
    NetlistBuilder,
    eval_nets,
    full_mask,
    pattern_words,
    substitute_constants,
)
from .tables import (
    DC,
    DASH,
    ONE,
    SopCover,
    TruthTable,
    ZERO,
    build_sop_into,
    cost,
    minimize,
    netlist_of_sop,
)


class LockError(Exception):
    pass


class CannotForceDependency(LockError):
    def __init__(self, variables: Sequence[str]):
        super().__init__(
            "cannot make the locked function depend on input(s): " + ", ".join(variables)
        )
        self.variables = tuple(variables)


class ActivationError(LockError):
    pass


class DontCarePolicy(Enum):
    DONT_CARE = "dontcare"
    COMPLEMENT = "complement"


class PartitionStrategy(Enum):
    MSB_SPLIT = "msb"
    BALANCED_RANDOM = "random"


@dataclass(frozen=True)
class KeyPlan:
    num_inputs: int
    num_key_bits: int
    partition: Tuple[int, ...]  # pattern index -> set index
    valid_keys: Tuple[int, ...]  # one key per set, MSB-first integers
    policy: DontCarePolicy = DontCarePolicy.DONT_CARE

    def __post_init__(self):
        m = len(self.valid_keys)
        if m < 2:
            raise LockError("need at least two valid key sequences")
        if len(set(self.valid_keys)) != m:
            raise LockError("valid key sequences must be pairwise distinct")
        if m > 1 << self.num_key_bits:
            raise LockError("more sets than key sequences")
        if len(self.partition) != 1 << self.num_inputs:
            raise LockError("partition must assign every input pattern")
        if any(not (0 <= s < m) for s in self.partition):
            raise LockError("partition set index out of range")
        if any(not (0 <= k < 1 << self.num_key_bits) for k in self.valid_keys):
            raise LockError("key sequence out of range")

    @property
    def num_sets(self) -> int:
        return len(self.valid_keys)

    def key_for(self, pattern: int) -> int:
        return self.valid_keys[self.partition[pattern]]


def make_key_plan(
    v: int,
    kb: int,
    m: int,
    strategy: PartitionStrategy = PartitionStrategy.MSB_SPLIT,
    rng_seed: int = 0,
    policy: DontCarePolicy = DontCarePolicy.DONT_CARE,
) -> KeyPlan:
    """Partition 2^v patterns into m sets and draw m distinct keys.

    MSB_SPLIT groups patterns by their top ceil(log2 m) bits;
    BALANCED_RANDOM deals a seeded shuffle round-robin so set sizes differ
    by at most one.  Keys are drawn seeded, skipping the all-zero and
    all-one sequences whenever enough key space remains.
    """
    if not (2 <= m <= min(1 << kb, 1 << v)):
        raise LockError(f"infeasible set count m={m} for v={v}, kb={kb}")
    rng = random.Random(rng_seed)
    n = 1 << v
    if strategy is PartitionStrategy.MSB_SPLIT:
        bbits = (m - 1).bit_length()
        partition = tuple(((p >> (v - bbits)) * m) >> bbits for p in range(n))
    else:
        order = list(range(n))
        rng.shuffle(order)
        partition = [0] * n
        for i, p in enumerate(order):
            partition[p] = i % m
        partition = tuple(partition)
    pool = list(range(1 << kb))
    if (1 << kb) - 2 >= m:
        pool.remove(0)
        pool.remove((1 << kb) - 1)
    elif (1 << kb) - 1 >= m:
        pool.remove(0)
    keys = tuple(rng.sample(pool, m))
    return KeyPlan(v, kb, partition, keys, policy)


# ---------------------------------------------------------------------------
# Locked functions


@dataclass
class LockedFunction:
    table: TruthTable  # over key bits ++ input bits
    plan: KeyPlan
    original: TruthTable
    key_names: Tuple[str, ...]
    input_names: Tuple[str, ...]
    covers: Tuple[SopCover, ...]
    network: Netlist
    form: str = "sop"  # "sop" or "xor" (parity reuse of the original cone)

    @property
    def num_key_bits(self) -> int:
        return self.plan.num_key_bits

    @property
    def num_inputs(self) -> int:
        return self.plan.num_inputs


def _locked_table(original: TruthTable, plan: KeyPlan) -> TruthTable:
    kb, v = plan.num_key_bits, plan.num_inputs
    valid = set(plan.valid_keys)
    cols = []
    for col in original.outputs:
        if any(x == DC for x in col):
            raise LockError("original function may not contain don't-cares")
        out = []
        for key in range(1 << kb):
            for x in range(1 << v):
                bit = col[x]
                if key == plan.key_for(x):
                    out.append(bit)
                elif key in valid:
                    out.append(bit ^ 1)
                elif plan.policy is DontCarePolicy.COMPLEMENT:
                    out.append(bit ^ 1)
                else:
                    out.append(DC)
        cols.append(tuple(out))
    return TruthTable(kb + v, tuple(cols))


def _synthesize_sop(lf_table: TruthTable, key_names, input_names) -> Tuple[Tuple[SopCover, ...], Netlist]:
    covers = tuple(minimize(lf_table, o) for o in range(lf_table.num_outputs))
    names = list(key_names) + list(input_names)
    used = set(names)
    outs = []
    for i in range(len(covers)):
        out = f"lo{i}"
        while out in used:
            out = "_" + out
        outs.append(out)
        used.add(out)
    nl = netlist_of_sop(covers, names, outs, key_vars=len(key_names))
    return covers, nl


def _cover_input_support(covers: Sequence[SopCover], kb: int, v: int) -> Set[int]:
    support = set()
    for c in covers:
        support |= c.support()
    return {i - kb for i in support if i >= kb}


def ensure_input_dependency(lf: LockedFunction) -> LockedFunction:
    """Pin don't-care entries until every input shows up in the covers.

    Conversions are deterministic: scanning outputs then minterm indices
    ascending, a single don't-care next to a fixed entry is preferred; a
    don't-care pair differing only in the missing variable is pinned 1/0
    otherwise.  Inputs the original function never depended on cannot be
    repaired this way and are reported instead.
    """
    kb, v = lf.plan.num_key_bits, lf.plan.num_inputs
    missing = sorted(set(range(v)) - _cover_input_support(lf.covers, kb, v))
    if not missing:
        return lf
    redundant = [a for a in range(v) if not lf.original.depends_on(a)]
    if any(a in redundant for a in missing):
        raise CannotForceDependency([lf.input_names[a] for a in redundant])

    cols = [list(col) for col in lf.table.outputs]
    size = 1 << (kb + v)
    for a in missing:
        mask = 1 << (v - 1 - a)
        done = False
        for o in range(len(cols)):  # single conversion next to a fixed value
            col = cols[o]
            for i in range(size):
                j = i ^ mask
                if col[i] == DC and col[j] in (ZERO, ONE):
                    col[i] = col[j] ^ 1
                    done = True
                    break
            if done:
                break
        if done:
            continue
        for o in range(len(cols)):  # pin a don't-care pair
            col = cols[o]
            for i in range(size):
                j = i | mask
                if i & mask:
                    continue
                if col[i] == DC and col[j] == DC:
                    col[i] = 1
                    col[j] = 0
                    done = True
                    break
            if done:
                break
        if not done:
            raise CannotForceDependency([lf.input_names[a]])

    table = TruthTable(kb + v, tuple(tuple(c) for c in cols))
    covers, network = _synthesize_sop(table, lf.key_names, lf.input_names)
    still = sorted(set(range(v)) - _cover_input_support(covers, kb, v))
    if still:
        raise CannotForceDependency([lf.input_names[a] for a in still])
    return replace(lf, table=table, covers=covers, network=network)


def _network_table(net: Netlist, kb: int, v: int) -> TruthTable:
    """Exhaustive table of a locked network over (key bits ++ input bits)."""
    t = kb + v
    words = pattern_words(t)
    mask = full_mask(t)
    inputs = {}
    for i, net_id in enumerate(list(net.key_inputs) + list(net.primary_inputs)):
        inputs[net_id] = words[i]
    vals = eval_nets(net, inputs, mask)
    cols = []
    for o in net.primary_outputs:
        w = vals[o]
        cols.append(tuple((w >> p) & 1 for p in range(1 << t)))
    return TruthTable(t, tuple(cols))


def _try_xor_form(
    table0: TruthTable,
    plan: KeyPlan,
    original: TruthTable,
    key_names,
    input_names,
    original_network: Optional[Netlist],
) -> Optional[Netlist]:
    """Two-set locks with don't-care fill admit a compact corruption form:
    original cone XORed with (effective key bit xor set indicator).  Valid
    only when that network still depends on every input variable."""
    if plan.policy is not DontCarePolicy.DONT_CARE or plan.num_sets != 2:
        return None
    kb, v = plan.num_key_bits, plan.num_inputs
    ks1, ks2 = plan.valid_keys
    diffbit = next(i for i in range(kb) if ((ks1 ^ ks2) >> (kb - 1 - i)) & 1)
    ks1_bit = (ks1 >> (kb - 1 - diffbit)) & 1

    b = NetlistBuilder()
    for i, name in enumerate(key_names):
        b.add_input(name, key=True)
    for name in input_names:
        b.add_input(name, key=False)

    # set indicator as a function of the inputs
    pcol = tuple(plan.partition)
    pset = {i for i, s in enumerate(pcol) if s == 1}
    single = None
    for a in range(v):
        amask = 1 << (v - 1 - a)
        if all(((x & amask) != 0) == (x in pset) for x in range(1 << v)):
            single = input_names[a]
            break
    if single is not None:
        p_net = single
    else:
        p_cover = minimize(TruthTable(v, (pcol,)), 0)
        p_net = b.fresh("setsel")
        build_sop_into(b, [p_cover], list(input_names), [p_net])

    t_net = b.fresh("corrupt")
    t_kind = GateKind.XNOR if ks1_bit else GateKind.XOR
    b.add_gate(t_kind, [key_names[diffbit], p_net], t_net)

    orig_outs = []
    if original_network is not None:
        rename = {}
        for i, net_id in enumerate(original_network.primary_inputs):
            rename[original_network.names[net_id]] = input_names[i]
        for g in original_network.gates:
            out_name = original_network.names[g.output]
            new_out = b.fresh(f"c_{out_name}")
            rename[out_name] = new_out
            b.add_gate(g.kind, [rename[original_network.names[i]] for i in g.inputs], new_out)
        for o in original_network.primary_outputs:
            orig_outs.append(rename[original_network.names[o]])
    else:
        covers = [minimize(original, o) for o in range(original.num_outputs)]
        for oi, cv in enumerate(covers):
            out = b.fresh(f"c_o{oi}")
            build_sop_into(b, [cv], list(input_names), [out])
            orig_outs.append(out)

    for oi, onet in enumerate(orig_outs):
        out = b.fresh(f"lo{oi}")
        b.add_gate(GateKind.XOR, [onet, t_net], out)
        b.add_output(out)
    net = b.build()

    ftab = _network_table(net, kb, v)
    for a in range(v):
        if not ftab.depends_on(kb + a):
            return None
    return net


@dataclass
class UniversalKeyReport:
    ok: bool
    witnesses: Dict[int, Optional[int]]  # key -> failing input (None if universal)
    per_input_key_counts: Tuple[int, ...]  # per input pattern: #keys correct there


def verify_no_universal_key(lf: LockedFunction) -> UniversalKeyReport:
    """Exhaustively confirm that every key sequence fails on some input."""
    kb, v = lf.plan.num_key_bits, lf.plan.num_inputs
    if kb + v > 16:
        raise LockError("universal-key check limited to 16 total variables")
    ftab = _network_table(lf.network, kb, v)
    nx = 1 << v
    diff = [0] * (1 << kb)  # per key: bitmask over inputs of any-output mismatch
    for o in range(ftab.num_outputs):
        col = ftab.outputs[o]
        orig = lf.original.outputs[o]
        for key in range(1 << kb):
            base = key << v
            m = 0
            for x in range(nx):
                if col[base + x] != orig[x]:
                    m |= 1 << x
            diff[key] |= m
    witnesses: Dict[int, Optional[int]] = {}
    ok = True
    for key in range(1 << kb):
        if diff[key] == 0:
            witnesses[key] = None
            ok = False
        else:
            witnesses[key] = (diff[key] & -diff[key]).bit_length() - 1
    counts = tuple(
        sum(1 for key in range(1 << kb) if not (diff[key] >> x) & 1) for x in range(nx)
    )
    return UniversalKeyReport(ok, witnesses, counts)


def lock_function(
    original: TruthTable,
    plan: KeyPlan,
    key_names: Optional[Sequence[str]] = None,
    input_names: Optional[Sequence[str]] = None,
    original_network: Optional[Netlist] = None,
) -> LockedFunction:
    """Build the key-dependent table, repair input dependencies, synthesize
    the cheaper of the two network forms, and gate on the no-universal-key
    check (falling back to the complement fill when the don't-care fill
    admits a universal key)."""
    kb, v = plan.num_key_bits, plan.num_inputs
    if original.num_vars != v:
        raise LockError("plan and function disagree on input count")
    if kb + v > 16:
        raise LockError("locked function too wide for exhaustive verification")
    if key_names is None:
        key_names = tuple(f"k{i}" for i in range(kb))
    if input_names is None:
        input_names = tuple(f"x{i}" for i in range(v))
    key_names, input_names = tuple(key_names), tuple(input_names)

    table0 = _locked_table(original, plan)
    covers0, net0 = _synthesize_sop(table0, key_names, input_names)
    lf = LockedFunction(table0, plan, original, key_names, input_names, covers0, net0, "sop")
    lf = ensure_input_dependency(lf)

    alt = _try_xor_form(table0, plan, original, key_names, input_names, original_network)
    if alt is not None and len(alt.gates) < len(lf.network.gates):
        lf = LockedFunction(table0, plan, original, key_names, input_names, covers0, alt, "xor")

    report = verify_no_universal_key(lf)
    if not report.ok:
        if plan.policy is DontCarePolicy.DONT_CARE:
            fallback = replace(plan, policy=DontCarePolicy.COMPLEMENT)
            return lock_function(original, fallback, key_names, input_names, original_network)
        raise LockError("universal key survived complement fill; lock rejected")
    return lf


# ---------------------------------------------------------------------------
# Key memory


@dataclass
class KeyMemory:
    key_inputs: Tuple[str, ...]
    support: Tuple[str, ...]
    entries: Dict[int, int]  # support pattern (MSB-first) -> key sequence
    num_key_bits: int

    def lookup(self, bits: Dict[str, int]) -> int:
        idx = 0
        for name in self.support:
            idx = (idx << 1) | (bits[name] & 1)
        return self.entries[idx]


def build_key_memory(plan: KeyPlan, input_nets: Sequence[str]) -> KeyMemory:
    """Input-pattern -> key lookup, reduced to the variables it depends on."""
    v = plan.num_inputs
    if len(input_nets) != v:
        raise LockError("input net list does not match plan width")
    full = [plan.key_for(x) for x in range(1 << v)]
    kept = []
    for a in range(v):
        amask = 1 << (v - 1 - a)
        if any(full[x] != full[x ^ amask] for x in range(1 << v)):
            kept.append(a)
    entries: Dict[int, int] = {}
    for proj in range(1 << len(kept)):
        x = 0
        for j, a in enumerate(kept):
            if (proj >> (len(kept) - 1 - j)) & 1:
                x |= 1 << (v - 1 - a)
        entries[proj] = full[x]
    return KeyMemory(
        key_inputs=(),
        support=tuple(input_nets[a] for a in kept),
        entries=entries,
        num_key_bits=plan.num_key_bits,
    )


# ---------------------------------------------------------------------------
# Activation


def _emit_mux_tree(
    b: NetlistBuilder,
    support: Sequence[str],
    leaves: Sequence[int],
    out_name: str,
    nots: Dict[str, str],
):
    """Shannon-expand a bit function over `support` into AND/OR/NOT muxes.

    Returns ('net', name) or ('const', bit); when a net is produced its
    final gate is named `out_name`.
    """

    def not_of(s: str) -> str:
        if s not in nots:
            n = b.fresh(f"{out_name}_n_{s}")
            b.add_gate(GateKind.NOT, [s], n)
            nots[s] = n
        return nots[s]

    def rec(depth: int, lo_idx: int, hi_idx: int, name: Optional[str]):
        vals = leaves[lo_idx:hi_idx]
        if all(x == vals[0] for x in vals):
            return ("const", vals[0])
        s = support[depth]
        mid = (lo_idx + hi_idx) // 2
        lo = rec(depth + 1, lo_idx, mid, None)
        hi = rec(depth + 1, mid, hi_idx, None)

        def emit(kind, ins):
            out = name if name is not None else b.fresh(f"{out_name}_m")
            b.add_gate(kind, ins, out)
            return ("net", out)

        if lo[0] == "const" and hi[0] == "const":
            if lo[1] == 0 and hi[1] == 1:
                if name is None:
                    return ("net", s)
                return emit(GateKind.BUF, [s])
            return emit(GateKind.NOT, [s])  # lo=1, hi=0
        if lo[0] == "const":
            if lo[1] == 0:
                return emit(GateKind.AND, [s, hi[1]])
            return emit(GateKind.OR, [not_of(s), hi[1]])
        if hi[0] == "const":
            if hi[1] == 0:
                return emit(GateKind.AND, [not_of(s), lo[1]])
            return emit(GateKind.OR, [s, lo[1]])
        t0 = b.fresh(f"{out_name}_a")
        b.add_gate(GateKind.AND, [not_of(s), lo[1]], t0)
        t1 = b.fresh(f"{out_name}_b")
        b.add_gate(GateKind.AND, [s, hi[1]], t1)
        return emit(GateKind.OR, [t0, t1])

    return rec(0, 0, len(leaves), out_name)


def activate(locked: Netlist, memory: Sequence[KeyMemory]) -> Netlist:
    """Replace key inputs by lookup logic over each block's support nets.

    The result has no key inputs and models the fielded chip; key bits whose
    lookup is constant are folded away by constant substitution.
    """
    key_names = [locked.names[i] for i in locked.key_inputs]
    claimed: List[str] = []
    for block in memory:
        claimed.extend(block.key_inputs)
    if len(claimed) != len(set(claimed)):
        dup = sorted({k for k in claimed if claimed.count(k) > 1})
        raise ActivationError(f"key inputs covered twice: {', '.join(dup)}")
    if set(claimed) != set(key_names):
        missing = sorted(set(key_names) - set(claimed))
        extra = sorted(set(claimed) - set(key_names))
        parts = []
        if missing:
            parts.append("uncovered: " + ", ".join(missing))
        if extra:
            parts.append("unknown: " + ", ".join(extra))
        raise ActivationError("; ".join(parts))

    b = NetlistBuilder()
    b.reserve(locked.names)
    for i in locked.primary_inputs:
        b.add_input(locked.names[i], key=False)
    const_keys: Dict[str, int] = {}
    for block in memory:
        if len(block.key_inputs) != block.num_key_bits:
            raise ActivationError("memory block key width mismatch")
        nbits = block.num_key_bits
        leaves_by_bit = []
        size = 1 << len(block.support)
        for bit in range(nbits):
            leaves_by_bit.append(
                [
                    (block.entries[p] >> (nbits - 1 - bit)) & 1
                    for p in range(size)
                ]
            )
        nots: Dict[str, str] = {}
        for bit, kname in enumerate(block.key_inputs):
            res = _emit_mux_tree(b, block.support, leaves_by_bit[bit], kname, nots)
            if res[0] == "const":
                const_keys[kname] = res[1]
                b.add_input(kname, key=True)
    for g in locked.gates:
        b.add_gate(g.kind, [locked.names[i] for i in g.inputs], locked.names[g.output])
    for o in locked.primary_outputs:
        b.add_output(locked.names[o])
    nl = b.build()
    if const_keys:
        nl = substitute_constants(nl, {nl.id_of(k): c for k, c in const_keys.items()})
    return nl
