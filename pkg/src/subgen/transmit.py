"""Coded-phase broadcast simulation under erasures.

Two strategies: Sequential broadcasts one sub-generation to completion per
feedback round; Semi-online sends every live sub-generation's current want
maximum per round and re-collects demands in between, optionally merging
sub-generations that no receiver wants jointly.

Decoding comes in two flavours. ``idealized`` treats every reception as
innovative (one counter per receiver and sub-generation), which is the model
behind the analytic metrics. ``concrete_gf`` draws real coefficients and
tracks rank with Gaussian elimination, so rank-deficient receptions cost
extra slots. Sub-generations whose want maximum is one are IDNC-style: the
coded packet is the plain XOR of the group and every targeted receiver
decodes on reception in either mode.
"""

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError, IncompleteLog, NonReducedDiversity
from .galois import GaussianSolver, encode, field, receiver_reduce
from .model import EmptySfm, ErasureChannel
from .partition import MODE_FRAMEWORK, Partition, delay_order

_STREAM_ERASURE = 1
_STREAM_COEFF = 2
_STREAM_PAYLOAD = 3

_MAX_SLOTS = 2_000_000


@dataclass
class StrategyConfig:
    """Knobs for the coded transmission phase."""

    strategy: str = "sequential"
    merging: bool = False
    g_schedule: tuple | None = None
    decode_mode: str = "idealized"
    field_m: int = 8
    payload_len: int = 32

    def __post_init__(self):
        if self.strategy not in ("sequential", "semi_online"):
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.decode_mode not in ("idealized", "concrete_gf"):
            raise ConfigError(f"unknown decode_mode {self.decode_mode!r}")
        if self.merging and self.strategy != "semi_online":
            raise ConfigError("merging requires the semi_online strategy")
        if self.g_schedule is not None:
            if self.strategy != "sequential":
                raise ConfigError("g_schedule requires the sequential strategy")
            self.g_schedule = tuple(int(g) for g in self.g_schedule)
            if not self.g_schedule or any(g < 1 for g in self.g_schedule):
                raise ConfigError("g_schedule entries must be >= 1")
        if self.field_m not in (1, 2, 4, 8):
            raise ConfigError("field_m must be one of 1, 2, 4, 8")


@dataclass(frozen=True)
class SlotEvent:
    slot: int
    round_no: int
    subgen: int
    field_m: int
    received: tuple
    decodes: tuple  # ((receiver, packet_id), ...)


@dataclass
class TransmissionLog:
    """Per-slot events plus the aggregates the metrics are computed from."""

    n_receivers: int
    total_targets: int
    k_total: int
    slots: list = dc_field(default_factory=list)
    rounds: list = dc_field(default_factory=list)
    merges: list = dc_field(default_factory=list)
    decode_slots: dict = dc_field(default_factory=dict)
    receptions: int = 0
    non_innovative: int = 0
    completed: bool = False


class ReceiverState:
    """Missing packets and per-sub-generation decoding state of one receiver."""

    __slots__ = ("index", "missing")

    def __init__(self, index: int, missing_mask: int):
        self.index = index
        self.missing = missing_mask


class _LiveSubgen:
    """Runtime decoding state of one sub-generation across all receivers."""

    __slots__ = ("sid", "cols", "mask", "xor_mode", "fld", "need", "got",
                 "unknown_cols", "solvers")

    def __init__(self, sid, cols, sim, xor_mode):
        self.sid = sid
        self.cols = cols
        self.mask = 0
        for c in cols:
            self.mask |= 1 << c
        self.xor_mode = xor_mode
        self.fld = field(1 if xor_mode else sim.cfg.field_m)
        n = sim.n
        self.need = [0] * n
        self.got = [0] * n
        self.unknown_cols = [()] * n
        self.solvers = [None] * n
        for r in range(n):
            unknown = sim.receivers[r].missing & self.mask
            self.need[r] = unknown.bit_count()
            if sim.concrete and not xor_mode and unknown:
                ucols = tuple(_bits(unknown))
                self.unknown_cols[r] = ucols
                self.solvers[r] = GaussianSolver(self.fld, len(ucols),
                                                 sim.cfg.payload_len)

    def remaining(self, sim, r) -> int:
        if self.xor_mode:
            return (sim.receivers[r].missing & self.mask).bit_count()
        if sim.concrete:
            solver = self.solvers[r]
            return 0 if solver is None else solver.n - solver.rank
        return max(0, self.need[r] - self.got[r])


def _bits(mask):
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b


def _empty_log(k_total: int) -> TransmissionLog:
    log = TransmissionLog(0, 0, k_total)
    log.completed = True
    return log


class _Sim:
    def __init__(self, partition, sfm, channel, config, stream):
        key = stream if isinstance(stream, tuple) else (stream,)
        self.sfm = sfm
        self.channel = channel
        self.cfg = config
        self.n = sfm.n_receivers
        self.concrete = config.decode_mode == "concrete_gf"
        self.e_gen = channel.rng(_STREAM_ERASURE, *key)
        self.c_gen = channel.rng(_STREAM_COEFF, *key)
        if self.concrete:
            p_gen = channel.rng(_STREAM_PAYLOAD, *key)
            self.originals = p_gen.integers(
                0, 256, (sfm.n_packets, config.payload_len), dtype=np.uint8)
        self.receivers = [ReceiverState(r, sfm.wants_masks[r])
                          for r in range(self.n)]
        self.log = TransmissionLog(self.n, int(sfm.entries.sum()),
                                   sfm.k_total)
        self.slot = 0

    def make_live(self, sid, packets):
        cols = sorted(self.sfm.column_of(p) for p in packets)
        mask = 0
        for c in cols:
            mask |= 1 << c
        w_max = max((w & mask).bit_count() for w in self.sfm.wants_masks)
        return _LiveSubgen(sid, cols, self, xor_mode=w_max <= 1)

    def send_slot(self, live: _LiveSubgen, round_no: int):
        if self.slot >= _MAX_SLOTS:
            raise RuntimeError("simulation exceeded the slot cap")
        self.slot += 1
        erased = self.channel.erasures(self.e_gen, self.n)
        coded = None
        if self.concrete and not live.xor_mode:
            coeffs = live.fld.random_coeffs(len(live.cols), self.c_gen)
            coded = encode([self.originals[c] for c in live.cols], coeffs,
                           live.fld, live.sid, tuple(live.cols))
        decodes = []
        for r in range(self.n):
            if erased[r] or live.remaining(self, r) <= 0:
                continue
            decodes.extend(self._process(live, r, coded))
        event = SlotEvent(self.slot, round_no, live.sid,
                          live.fld.m, tuple(not e for e in erased),
                          tuple(decodes))
        self.log.slots.append(event)
        for r, pid in decodes:
            self.log.decode_slots[(r, pid)] = self.slot

    def _process(self, live, r, coded):
        recv = self.receivers[r]
        if live.xor_mode:
            unknown = recv.missing & live.mask
            col = unknown.bit_length() - 1
            recv.missing &= ~unknown
            return [(r, self.sfm.packet_ids[col])]
        if not self.concrete:
            live.got[r] += 1
            if live.got[r] >= live.need[r]:
                return self._decode_all(live, r)
            return []
        self.log.receptions += 1
        ucols = live.unknown_cols[r]
        known = {c: self.originals[c] for c in live.cols if c not in ucols}
        reduced = receiver_reduce(coded, known, live.fld)
        pos = {c: i for i, c in enumerate(coded.packet_ids)}
        row = [int(reduced.coefficients[pos[c]]) for c in ucols]
        solver = live.solvers[r]
        if not solver.add_row(row, reduced.payload):
            self.log.non_innovative += 1
        if solver.rank == solver.n:
            return self._decode_all(live, r)
        return []

    def _decode_all(self, live, r):
        recv = self.receivers[r]
        cols = list(_bits(recv.missing & live.mask))
        recv.missing &= ~live.mask
        return [(r, self.sfm.packet_ids[c]) for c in cols]

    def finish(self):
        if all(recv.missing == 0 for recv in self.receivers):
            self.log.completed = True
        return self.log


def _check_diversity(groups):
    """Groups of >= 2 coding sets must not share packets with anything."""
    total = 0
    union = set()
    for packets in groups:
        total += len(packets)
        union.update(packets)
    if total != len(union):
        raise NonReducedDiversity(
            "reduce packet diversity to one before transmitting with g >= 2")


def _ordered_subgens(partition: Partition):
    return [partition.subgens[i] for i in delay_order(partition)]


def run_sequential(partition, sfm, channel: ErasureChannel,
                   config: StrategyConfig | None = None,
                   stream=0) -> TransmissionLog:
    """Broadcast sub-generations one by one, each until every targeted
    receiver has ACKed completion."""
    config = config or StrategyConfig()
    if isinstance(sfm, EmptySfm):
        return _empty_log(sfm.k_total)
    if config.strategy != "sequential":
        raise ConfigError("config.strategy does not match run_sequential")
    sim = _Sim(partition, sfm, channel, config, stream)
    if config.g_schedule:
        if partition.mode != MODE_FRAMEWORK:
            raise ConfigError("g_schedule needs a framework partition")
        pool = [s for sg in _ordered_subgens(partition) for s in sg.member_sets]
        if any(g >= 2 for g in config.g_schedule):
            _check_diversity([s.packets for s in pool])
        chunks = []
        i = 0
        r = 0
        while i < len(pool):
            g = config.g_schedule[min(r, len(config.g_schedule) - 1)]
            chunks.append([p for s in pool[i:i + g] for p in s.packets])
            i += g
            r += 1
        lives = [sim.make_live(m + 1, packets)
                 for m, packets in enumerate(chunks)]
    else:
        ordered = _ordered_subgens(partition)
        if partition.g >= 2:
            _check_diversity([sg.packets for sg in ordered])
        # built lazily so earlier rounds' decodes are visible to later ones
        lives = (sim.make_live(sg.index, sg.packets) for sg in ordered)

    round_no = 0
    for live in lives:
        if all(live.remaining(sim, r) == 0 for r in range(sim.n)):
            continue
        round_no += 1
        while any(live.remaining(sim, r) > 0 for r in range(sim.n)):
            sim.send_slot(live, round_no)
        sim.log.rounds.append(sim.slot)
    return sim.finish()


def run_semi_online(partition, sfm, channel: ErasureChannel,
                    config: StrategyConfig | None = None,
                    stream=0) -> TransmissionLog:
    """Each round sends every live sub-generation's current want maximum,
    then refreshes demands from feedback (and merges, when enabled)."""
    config = config or StrategyConfig()
    if isinstance(sfm, EmptySfm):
        return _empty_log(sfm.k_total)
    if config.strategy != "semi_online":
        raise ConfigError("config.strategy does not match run_semi_online")
    sim = _Sim(partition, sfm, channel, config, stream)
    ordered = _ordered_subgens(partition)
    if partition.g >= 2:
        _check_diversity([sg.packets for sg in ordered])
    lives = [sim.make_live(sg.index, sg.packets) for sg in ordered]

    round_no = 0
    while True:
        plan = []
        for live in lives:
            w = max(live.remaining(sim, r) for r in range(sim.n))
            if w > 0:
                plan.append((live, w))
        if not plan:
            break
        round_no += 1
        for live, count in plan:
            for _ in range(count):
                sim.send_slot(live, round_no)
        sim.log.rounds.append(sim.slot)
        if config.merging:
            lives = _apply_merges(sim, [live for live, _ in plan], round_no)
    return sim.finish()


def merge_subgenerations(states: dict) -> list:
    """Plan merges from per-sub-generation remaining want counts.

    ``states`` maps sub-generation id to the per-receiver remaining counts.
    Two sub-generations conflict iff some receiver still wants coded packets
    of both; non-conflicting ones are grouped greedily in decreasing order
    of their remaining want maximum. The summed want maximum never grows.
    """
    live = [sid for sid, counts in states.items() if any(counts)]
    wmax = {sid: max(states[sid]) for sid in live}
    order = sorted(live, key=lambda sid: (-wmax[sid], sid))
    used = set()
    groups = []
    for sid in order:
        if sid in used:
            continue
        used.add(sid)
        group = [sid]
        engaged = [c > 0 for c in states[sid]]
        for other in order:
            if other in used:
                continue
            counts = states[other]
            if any(e and c > 0 for e, c in zip(engaged, counts)):
                continue
            group.append(other)
            used.add(other)
            engaged = [e or c > 0 for e, c in zip(engaged, counts)]
        groups.append(sorted(group))
    return groups


def _apply_merges(sim: _Sim, lives, round_no):
    alive = [lv for lv in lives
             if any(lv.remaining(sim, r) > 0 for r in range(sim.n))]
    if len(alive) < 2:
        return alive
    states = {lv.sid: [lv.remaining(sim, r) for r in range(sim.n)]
              for lv in alive}
    groups = merge_subgenerations(states)
    if all(len(g) == 1 for g in groups):
        return alive
    by_sid = {lv.sid: lv for lv in alive}
    before = sum(max(states[lv.sid]) for lv in alive)
    merged = []
    for group in groups:
        if len(group) == 1:
            merged.append(by_sid[group[0]])
            continue
        members = [by_sid[sid] for sid in group]
        packets = [sim.sfm.packet_ids[c] for lv in members for c in lv.cols]
        live = sim.make_live(min(group), packets)
        if not sim.concrete:
            # keep credit for packets already received within members
            for r in range(sim.n):
                live.need[r] = sum(m.remaining(sim, r) for m in members)
                live.got[r] = 0
        else:
            for r in range(sim.n):
                if live.solvers[r] is None:
                    continue
                pos = {c: i for i, c in enumerate(live.unknown_cols[r])}
                for m in members:
                    solver = m.solvers[r]
                    if solver is None:
                        continue
                    for row in solver._rows:
                        wide = np.zeros(live.solvers[r].n + sim.cfg.payload_len,
                                        dtype=np.uint8)
                        for j, c in enumerate(m.unknown_cols[r]):
                            wide[pos[c]] = row[j]
                        wide[live.solvers[r].n:] = row[solver.n:]
                        live.solvers[r].add_row(wide[:live.solvers[r].n],
                                                wide[live.solvers[r].n:])
        merged.append(live)
    after = sum(max(lv.remaining(sim, r) for r in range(sim.n))
                for lv in merged)
    sim.log.merges.append((round_no, before, after))
    return merged


def measure(log: TransmissionLog):
    """(completion slots, average decoding delay) of a finished run."""
    if not log.completed:
        raise IncompleteLog("transmission log did not reach completion")
    if log.total_targets == 0:
        return 0, 0.0
    return len(log.slots), sum(log.decode_slots.values()) / log.total_targets


def write_trace(log: TransmissionLog, fileobj):
    """CSV trace: one row per (slot, receiver)."""
    writer = csv.writer(fileobj)
    writer.writerow(["slot", "round", "subgen", "receiver", "received",
                     "decoded_packets"])
    for ev in log.slots:
        by_receiver = {}
        for r, pid in ev.decodes:
            by_receiver.setdefault(r, []).append(pid)
        for r in range(log.n_receivers):
            decoded = ";".join(str(p) for p in by_receiver.get(r, []))
            writer.writerow([ev.slot, ev.round_no, ev.subgen, r,
                             int(ev.received[r]), decoded])
