"""Packet demand state, erasure channel, and the systematic phase.

The state feedback matrix (SFM) is the reduced receiver-by-packet demand
matrix left over after broadcasting every packet uncoded once: rows are
receivers still missing something, columns are packets still missed by
someone.
"""

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DimensionMismatch, EmptyRowOrColumn


class StateFeedbackMatrix:
    """Reduced N x K binary demand matrix with want/target set views."""

    __slots__ = ("entries", "packet_ids", "k_total", "wants_masks", "_col")

    def __init__(self, entries, packet_ids=None, k_total=None):
        entries = np.asarray(entries, dtype=np.uint8)
        if entries.ndim != 2:
            raise DimensionMismatch("rows have unequal lengths")
        if entries.size == 0:
            raise EmptyRowOrColumn("empty matrix")
        if not np.isin(entries, (0, 1)).all():
            raise DimensionMismatch("entries must be 0/1")
        if (entries.sum(axis=1) == 0).any():
            raise EmptyRowOrColumn("a receiver wants no packet")
        if (entries.sum(axis=0) == 0).any():
            raise EmptyRowOrColumn("a packet is wanted by no receiver")
        n, k = entries.shape
        if packet_ids is None:
            packet_ids = tuple(range(1, k + 1))
        else:
            packet_ids = tuple(int(p) for p in packet_ids)
            if len(packet_ids) != k:
                raise DimensionMismatch("packet_ids length differs from K")
            if len(set(packet_ids)) != k:
                raise DimensionMismatch("packet_ids must be distinct")
        entries.flags.writeable = False
        self.entries = entries
        self.packet_ids = packet_ids
        self.k_total = int(k_total) if k_total is not None else k
        self.wants_masks = tuple(
            sum(1 << j for j in range(k) if row[j]) for row in entries)
        self._col = {pid: j for j, pid in enumerate(packet_ids)}

    @property
    def n_receivers(self) -> int:
        return self.entries.shape[0]

    @property
    def n_packets(self) -> int:
        return self.entries.shape[1]

    def column_of(self, pid: int) -> int:
        return self._col[pid]

    def wants(self, n: int) -> tuple:
        """Packet ids receiver n still wants."""
        return tuple(self.packet_ids[j]
                     for j in np.flatnonzero(self.entries[n]))

    def target_size(self, pid: int) -> int:
        return int(self.entries[:, self._col[pid]].sum())

    def __repr__(self):
        return f"StateFeedbackMatrix({self.n_receivers}x{self.n_packets})"


@dataclass(frozen=True)
class EmptySfm:
    """Marker for a degenerate systematic phase: nothing was missed, coded
    transmissions are unnecessary."""

    k_total: int


@dataclass(frozen=True)
class DemandProfile:
    """Per-receiver Wants sizes and per-packet Target sizes of an SFM."""

    wants_sizes: tuple
    w_max: int
    target_sizes: tuple
    total_targets: int


@dataclass(frozen=True)
class ErasureChannel:
    """i.i.d. memoryless Bernoulli erasures; feedback is lossless."""

    erasure_prob: float
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.erasure_prob < 1.0:
            raise ValueError("erasure probability must be in [0, 1)")

    def rng(self, *key: int) -> np.random.Generator:
        """Independent deterministic stream for (seed, *key)."""
        return np.random.default_rng(
            np.random.SeedSequence([self.rng_seed, *key]))

    def erasures(self, gen: np.random.Generator, n: int) -> np.ndarray:
        """One slot worth of erasure flags, one per receiver."""
        return gen.random(n) < self.erasure_prob


def sfm_from_rows(rows, packet_ids=None, k_total=None) -> StateFeedbackMatrix:
    """Build and validate an SFM from binary rows."""
    rows = list(rows)
    if not rows:
        raise EmptyRowOrColumn("no rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DimensionMismatch("rows have unequal lengths")
    return StateFeedbackMatrix(rows, packet_ids, k_total)


def demand_profile(sfm: StateFeedbackMatrix) -> DemandProfile:
    wants = tuple(int(x) for x in sfm.entries.sum(axis=1))
    targets = tuple(int(x) for x in sfm.entries.sum(axis=0))
    return DemandProfile(wants, max(wants), targets, sum(targets))


def run_systematic(k_total: int, n_total: int, channel: ErasureChannel,
                   stream: int = 0):
    """Broadcast K_T packets uncoded once and collect the reduced SFM.

    Returns an :class:`EmptySfm` marker when every receiver got everything.
    """
    if k_total < 1 or n_total < 1:
        raise ValueError("k_total and n_total must be >= 1")
    gen = channel.rng(0, stream)
    missed = gen.random((n_total, k_total)) < channel.erasure_prob
    rows = missed.any(axis=1)
    cols = missed.any(axis=0)
    if not rows.any():
        return EmptySfm(k_total)
    packet_ids = tuple(int(j) + 1 for j in np.flatnonzero(cols))
    entries = missed[np.ix_(rows, cols)].astype(np.uint8)
    return StateFeedbackMatrix(entries, packet_ids, k_total=k_total)


def format_sfm(sfm: StateFeedbackMatrix) -> str:
    """Serialize to the SFM text format."""
    lines = [f"{sfm.n_receivers} {sfm.n_packets}"]
    if sfm.packet_ids != tuple(range(1, sfm.n_packets + 1)):
        lines.append("packets: " + " ".join(str(p) for p in sfm.packet_ids))
    for row in sfm.entries:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_sfm(text: str) -> StateFeedbackMatrix:
    """Parse the SFM text format (inverse of :func:`format_sfm`)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DimensionMismatch("empty SFM text")
    try:
        n, k = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise DimensionMismatch(f"bad header line {lines[0]!r}") from exc
    body = lines[1:]
    packet_ids = None
    if body and body[0].startswith("packets:"):
        packet_ids = [int(x) for x in body[0].split(":", 1)[1].split()]
        body = body[1:]
    if len(body) != n:
        raise DimensionMismatch(f"expected {n} rows, got {len(body)}")
    rows = [[int(x) for x in ln.split()] for ln in body]
    if any(len(r) != k for r in rows):
        raise DimensionMismatch("row width differs from header K")
    return sfm_from_rows(rows, packet_ids)


def load_fixture(name: str) -> StateFeedbackMatrix:
    """Load a shipped fixture SFM ("f1" or "f2")."""
    text = resources.files("subgen.fixtures").joinpath(f"{name}.sfm").read_text()
    return parse_sfm(text)
