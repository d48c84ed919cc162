"""Sub-generation partitioning and the analytic throughput/delay metrics.

A framework partition groups the coding sets of an IDNC solution into
sub-generations of g sets each; the classic baseline instead slices the raw
packet block into runs of g consecutive packets. ``analytic_metrics``
evaluates the erasure-free minimum block completion time (sum of the
per-sub-generation maxima) and the minimum average packet decoding delay
under block decoding per sub-generation.
"""

import math
from dataclasses import dataclass

from .errors import InvalidG
from .idnc import CodingSet, IdncSolution, canonical_order
from .model import StateFeedbackMatrix

MODE_FRAMEWORK = "framework"
MODE_CLASSIC = "classic"


@dataclass(frozen=True)
class SubGeneration:
    """One group of coding sets (or a classic packet run) sent together."""

    index: int
    member_sets: tuple
    packets: tuple
    per_receiver_wants: tuple
    w_max: int
    target_total: int


@dataclass(frozen=True)
class Partition:
    """Ordered sub-generations; the stored order is the construction order,
    broadcasting happens in decreasing target order (see delay_order)."""

    subgens: tuple
    g: int
    mode: str

    @property
    def m_count(self) -> int:
        return len(self.subgens)

    def dump(self) -> str:
        lines = []
        for sg in self.subgens:
            sets = "[" + " ".join(
                "{" + ",".join(str(p) for p in s.packets) + "}"
                for s in sg.member_sets) + "]"
            pk = "[" + ",".join(str(p) for p in sg.packets) + "]"
            lines.append(f"{sg.index}: {sets} packets={pk} wmax={sg.w_max}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AnalyticMetrics:
    u_g: int
    d_g: float
    per_subgen_wmax: tuple


def _make_subgen(index: int, member_sets, packets,
                 sfm: StateFeedbackMatrix) -> SubGeneration:
    packets = tuple(sorted(set(packets)))
    mask = 0
    target_total = 0
    for p in packets:
        c = sfm.column_of(p)
        mask |= 1 << c
        target_total += int(sfm.entries[:, c].sum())
    wants = tuple((w & mask).bit_count() for w in sfm.wants_masks)
    return SubGeneration(index, tuple(member_sets), packets, wants,
                         max(wants), target_total)


def _sorted_sets(solution: IdncSolution):
    return canonical_order(solution.sets)


def partition_direct(solution: IdncSolution, g: int,
                     sfm: StateFeedbackMatrix) -> Partition:
    """Consecutive runs of g coding sets in decreasing-target order."""
    if not 1 <= g <= solution.cardinality:
        raise InvalidG(f"g={g} outside [1, {solution.cardinality}]")
    sets = _sorted_sets(solution)
    subgens = []
    for m, start in enumerate(range(0, len(sets), g), start=1):
        chunk = sets[start:start + g]
        packets = [p for s in chunk for p in s.packets]
        subgens.append(_make_subgen(m, chunk, packets, sfm))
    return Partition(tuple(subgens), g, MODE_FRAMEWORK)


def partition_smart(solution: IdncSolution, g: int,
                    sfm: StateFeedbackMatrix) -> Partition:
    """Fill sub-generations sequentially, preferring coding sets that do not
    raise the current sub-generation's want maximum."""
    if not 1 <= g <= solution.cardinality:
        raise InvalidG(f"g={g} outside [1, {solution.cardinality}]")
    remaining = list(_sorted_sets(solution))
    m_total = math.ceil(len(remaining) / g)
    masks = []
    for s in remaining:
        m = 0
        for p in s.packets:
            m |= 1 << sfm.column_of(p)
        masks.append(m)
    n_recv = sfm.n_receivers
    subgens = []
    for m in range(1, m_total + 1):
        chunk = []
        counts = [0] * n_recv
        w_max = 0
        for _ in range(g):
            if not remaining:
                break
            # A set leaves w_max untouched iff no receiver already at w_max
            # wants one of its packets. With an empty sub-generation every
            # set raises w_max, so the most targeted one wins by fallthrough.
            pick = 0
            for i, smask in enumerate(masks):
                critical = (n for n in range(n_recv) if counts[n] == w_max)
                if all(not sfm.wants_masks[n] & smask for n in critical):
                    pick = i
                    break
            smask = masks.pop(pick)
            chunk.append(remaining.pop(pick))
            for n in range(n_recv):
                if sfm.wants_masks[n] & smask:
                    counts[n] += 1
            w_max = max(counts)
        packets = [p for s in chunk for p in s.packets]
        subgens.append(_make_subgen(m, chunk, packets, sfm))
        if not remaining:
            break
    return Partition(tuple(subgens), g, MODE_FRAMEWORK)


def partition_classic(sfm: StateFeedbackMatrix, g: int) -> Partition:
    """Baseline: consecutive, even runs of g packets by column order."""
    if not 1 <= g <= sfm.n_packets:
        raise InvalidG(f"g={g} outside [1, {sfm.n_packets}]")
    subgens = []
    for m, start in enumerate(range(0, sfm.n_packets, g), start=1):
        packets = sfm.packet_ids[start:start + g]
        subgens.append(_make_subgen(m, (), packets, sfm))
    return Partition(tuple(subgens), g, MODE_CLASSIC)


def delay_order(partition: Partition) -> tuple:
    """Broadcast order: sub-generation indices sorted by decreasing total
    target count (stable)."""
    return tuple(sorted(range(len(partition.subgens)),
                        key=lambda i: -partition.subgens[i].target_total))


def analytic_metrics(partition: Partition,
                     sfm: StateFeedbackMatrix) -> AnalyticMetrics:
    """Erasure-free minimum completion time and average decoding delay.

    A receiver finishes sub-generation G_m after its own want count there,
    on top of the completion offset of everything sent before; packets with
    diversity above one count their earliest decoding opportunity.
    """
    order = delay_order(partition)
    offset = {}
    cum = 0
    for pos in order:
        offset[pos] = cum
        cum += partition.subgens[pos].w_max
    by_packet = {}
    for pos in order:
        for p in partition.subgens[pos].packets:
            by_packet.setdefault(p, []).append(pos)
    total = 0
    for n in range(sfm.n_receivers):
        for p in sfm.wants(n):
            best = min(offset[pos] + partition.subgens[pos].per_receiver_wants[n]
                       for pos in by_packet[p])
            total += best
    total_targets = int(sfm.entries.sum())
    u_g = sum(sg.w_max for sg in partition.subgens)
    return AnalyticMetrics(u_g, total / total_targets,
                           tuple(sg.w_max for sg in partition.subgens))
