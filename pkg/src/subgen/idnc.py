"""IDNC graph construction and clique-cover solutions.

Vertices are the K partially-received packets; an edge joins two packets
iff no receiver wants both, so coding sets are exactly the cliques. The
minimum number of coding sets needed to cover all packets equals the
chromatic number of the complement (conflict) graph, which the exact
solver computes by branch-and-bound.

Bitmask conventions: all internal masks index matrix columns, with bit j
standing for column j of the SFM.
"""

from dataclasses import dataclass

from .errors import EmptySetProduced, SizeLimitExceeded, UnknownPacket
from .model import StateFeedbackMatrix

EXACT_SOLVER_LIMIT = 25


@dataclass(frozen=True)
class CodingSet:
    """Packets combined into one instantly decodable coded packet.

    ``targets`` holds each packet's target-set size, so the total target
    count survives packet removal without another look at the SFM.
    """

    packets: tuple
    targets: tuple

    @property
    def target_count(self) -> int:
        return sum(self.targets)

    def __contains__(self, pid):
        return pid in self.packets


@dataclass(frozen=True)
class IdncSolution:
    """Ordered collection of coding sets covering all K packets."""

    sets: tuple

    @property
    def cardinality(self) -> int:
        return len(self.sets)

    def packet_union(self) -> set:
        out = set()
        for s in self.sets:
            out.update(s.packets)
        return out


class IdncGraph:
    """Packet compatibility graph; adjacency means 'codable together'."""

    __slots__ = ("n_vertices", "packet_ids", "adj_masks", "_col")

    def __init__(self, packet_ids, adj_masks):
        self.packet_ids = tuple(packet_ids)
        self.n_vertices = len(self.packet_ids)
        self.adj_masks = tuple(adj_masks)
        self._col = {pid: j for j, pid in enumerate(self.packet_ids)}

    def adjacent(self, pid_i: int, pid_j: int) -> bool:
        i, j = self._col[pid_i], self._col[pid_j]
        return bool(self.adj_masks[i] >> j & 1)

    def conflict_masks(self) -> tuple:
        full = (1 << self.n_vertices) - 1
        return tuple((full & ~m) & ~(1 << j)
                     for j, m in enumerate(self.adj_masks))


def build_graph(sfm: StateFeedbackMatrix) -> IdncGraph:
    """Edge between packets i, j iff no receiver wants both."""
    k = sfm.n_packets
    conf = [0] * k
    for w in sfm.wants_masks:
        m = w
        while m:
            b = m & -m
            conf[b.bit_length() - 1] |= w
            m ^= b
    full = (1 << k) - 1
    adj = [(full & ~conf[j]) & ~(1 << j) for j in range(k)]
    return IdncGraph(sfm.packet_ids, adj)


# --- exact coloring of the conflict graph ---------------------------------

def _bits(mask):
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b


def _greedy_clique(conf) -> int:
    """Greedy max clique of the conflict graph; lower bound on chi."""
    order = sorted(range(len(conf)), key=lambda v: -conf[v].bit_count())
    members = 0
    size = 0
    for v in order:
        if members & ~conf[v] == 0:
            members |= 1 << v
            size += 1
    return size


def _color_upto(conf, target):
    """Complete DSATUR branch-and-bound search for a coloring with at most
    ``target`` colors; returns color list or None."""
    n = len(conf)
    if n == 0:
        return []
    colors = [-1] * n
    neigh_colors = [0] * n  # bitmask over color indices
    degrees = [conf[v].bit_count() for v in range(n)]
    found = []

    def pick():
        best = -1
        best_key = None
        for v in range(n):
            if colors[v] >= 0:
                continue
            key = (neigh_colors[v].bit_count(), degrees[v], -v)
            if best_key is None or key > best_key:
                best, best_key = v, key
        return best

    def assign(v, c, delta):
        colors[v] = c if delta else -1
        bit = 1 << c
        for u in _bits(conf[v]):
            if delta:
                neigh_colors[u] |= bit
            else:
                # recompute: another neighbor may still carry color c
                keep = any(colors[w] == c for w in _bits(conf[u]))
                if not keep:
                    neigh_colors[u] &= ~bit

    def rec(ncolored, used):
        if found:
            return
        if ncolored == n:
            found.append(colors.copy())
            return
        v = pick()
        for c in range(used):
            if not (neigh_colors[v] >> c & 1):
                assign(v, c, True)
                rec(ncolored + 1, used)
                assign(v, c, False)
                if found:
                    return
        if used < target:
            assign(v, used, True)
            rec(ncolored + 1, used + 1)
            assign(v, used, False)

    rec(0, 0)
    return found[0] if found else None


def _dsatur_greedy(conf):
    n = len(conf)
    colors = [-1] * n
    neigh_colors = [0] * n
    degrees = [conf[v].bit_count() for v in range(n)]
    for _ in range(n):
        v = max((u for u in range(n) if colors[u] < 0),
                key=lambda u: (neigh_colors[u].bit_count(), degrees[u], -u))
        c = 0
        while neigh_colors[v] >> c & 1:
            c += 1
        colors[v] = c
        for u in _bits(conf[v]):
            neigh_colors[u] |= 1 << c
    return colors


def _chromatic(conf) -> int:
    if not conf:
        return 0
    ub = max(_dsatur_greedy(conf)) + 1
    lb = _greedy_clique(conf)
    while lb < ub:
        better = _color_upto(conf, ub - 1)
        if better is None:
            break
        ub = max(better) + 1
    return ub


def _induced(conf, mask):
    verts = list(_bits(mask))
    pos = {v: i for i, v in enumerate(verts)}
    out = []
    for v in verts:
        m = 0
        for u in _bits(conf[v] & mask):
            m |= 1 << pos[u]
        out.append(m)
    return out


def _maximal_cliques(adj):
    """Bron-Kerbosch with pivoting over adjacency bitmasks."""
    n = len(adj)
    if n == 0:
        return []
    out = []

    def bk(r, p, x):
        if not p and not x:
            out.append(r)
            return
        # pivot: vertex of p|x with most neighbours inside p
        pivot, best = -1, -1
        for u in _bits(p | x):
            cnt = (adj[u] & p).bit_count()
            if cnt > best:
                pivot, best = u, cnt
        cand = p & ~adj[pivot]
        for v in _bits(cand):
            b = 1 << v
            bk(r | b, p & adj[v], x & adj[v])
            p &= ~b
            x |= b

    bk(0, (1 << n) - 1 if n else 0, 0)
    return out


# --- solutions --------------------------------------------------------------

def _set_from_mask(mask, sfm: StateFeedbackMatrix) -> CodingSet:
    cols = sorted(_bits(mask))
    pids = tuple(sfm.packet_ids[c] for c in cols)
    targets = tuple(int(sfm.entries[:, c].sum()) for c in cols)
    return CodingSet(pids, targets)


def solution_sort_key(s: CodingSet):
    """Canonical broadcast order: most targeted first, larger sets first,
    later-starting sets first; fully deterministic."""
    return (-s.target_count, -len(s.packets), -min(s.packets), s.packets)


def canonical_order(sets) -> tuple:
    return tuple(sorted(sets, key=solution_sort_key))


def solve_exact(graph: IdncGraph, sfm: StateFeedbackMatrix,
                limit: int = EXACT_SOLVER_LIMIT) -> IdncSolution:
    """Minimum clique cover, every set maximal.

    The cover is rebuilt greedily from the full maximal-clique list at the
    optimal cardinality: each step takes the feasible clique covering the
    most residual target demand, preferring the one dragging in the least
    already-covered demand. That keeps packet diversity down while staying
    at cardinality chi.
    """
    k = graph.n_vertices
    if k > limit:
        raise SizeLimitExceeded(f"{k} packets exceeds exact limit {limit}")
    conf = graph.conflict_masks()
    chi = _chromatic(list(conf))
    cliques = _maximal_cliques(list(graph.adj_masks))
    tcol = [int(sfm.entries[:, c].sum()) for c in range(k)]

    def tsum(mask):
        return sum(tcol[c] for c in _bits(mask))

    colorable_cache = {}

    def coverable(mask, budget):
        if mask == 0:
            return True
        if mask.bit_count() > budget * max(
                (m & mask).bit_count() + 1 for m in
                (graph.adj_masks[c] for c in _bits(mask))):
            return False
        key = (mask, budget)
        if key not in colorable_cache:
            colorable_cache[key] = _color_upto(_induced(conf, mask),
                                               budget) is not None
        return colorable_cache[key]

    uncovered = (1 << k) - 1
    budget = chi
    chosen = []
    while uncovered:
        ranked = []
        for cm in cliques:
            new = cm & uncovered
            if not new:
                continue
            ranked.append((-tsum(new), tsum(cm & ~uncovered),
                           -cm.bit_count(), -(cm & -cm), cm))
        ranked.sort()
        for _, _, _, cm in ranked:
            if coverable(uncovered & ~cm, budget - 1):
                chosen.append(cm)
                uncovered &= ~cm
                budget -= 1
                break
        else:  # pragma: no cover - impossible for a correct chi
            raise AssertionError("cover construction lost feasibility")
    sets = canonical_order(_set_from_mask(m, sfm) for m in chosen)
    return IdncSolution(sets)


def solve_heuristic(graph: IdncGraph, sfm: StateFeedbackMatrix) -> IdncSolution:
    """Greedy clique cover: seed at the most wanted uncovered packet, grow
    among uncovered packets by target count, then maximalize over all."""
    k = graph.n_vertices
    adj = graph.adj_masks
    tcol = [int(sfm.entries[:, c].sum()) for c in range(k)]
    order = sorted(range(k), key=lambda c: (-tcol[c], c))
    uncovered = (1 << k) - 1
    masks = []
    while uncovered:
        seed = max(_bits(uncovered), key=lambda c: (tcol[c], -c))
        members = 1 << seed
        common = adj[seed]
        for c in order:
            b = 1 << c
            if b & uncovered & common:
                members |= b
                common &= adj[c]
        for c in order:
            b = 1 << c
            if b & common and not b & members:
                members |= b
                common &= adj[c]
        masks.append(members)
        uncovered &= ~members
    sets = canonical_order(_set_from_mask(m, sfm) for m in masks)
    return IdncSolution(sets)


def reduce_diversity(solution: IdncSolution) -> IdncSolution:
    """Drop packets already carried by an earlier set; order is preserved
    and the cardinality stays put."""
    seen = set()
    out = []
    for s in solution.sets:
        kept = [(p, t) for p, t in zip(s.packets, s.targets) if p not in seen]
        if not kept:
            raise EmptySetProduced(
                f"set {s.packets} is fully covered by earlier sets")
        seen.update(p for p, _ in kept)
        out.append(CodingSet(tuple(p for p, _ in kept),
                             tuple(t for _, t in kept)))
    return IdncSolution(tuple(out))


def diversity(solution: IdncSolution, pid: int) -> int:
    """Number of sets (or sub-generations) carrying the packet."""
    count = sum(1 for s in solution.sets if pid in s.packets)
    if count == 0:
        raise UnknownPacket(pid)
    return count


def dumps_solution(solution: IdncSolution) -> str:
    """One line per set, space-separated packet ids."""
    return "\n".join(" ".join(str(p) for p in s.packets)
                     for s in solution.sets) + "\n"


def parse_solution(text: str, sfm: StateFeedbackMatrix) -> IdncSolution:
    sets = []
    for line in text.splitlines():
        if not line.strip():
            continue
        pids = tuple(int(x) for x in line.split())
        targets = tuple(sfm.target_size(p) for p in pids)
        sets.append(CodingSet(pids, targets))
    return IdncSolution(tuple(sets))


def is_valid_solution(sfm: StateFeedbackMatrix,
                      solution: IdncSolution) -> bool:
    """Both conditions of a valid solution: full cover, and no two sets
    whose union is still a coding set."""
    masks = []
    for s in solution.sets:
        m = 0
        for p in s.packets:
            m |= 1 << sfm.column_of(p)
        masks.append(m)
        if any((w & m).bit_count() > 1 for w in sfm.wants_masks):
            return False
    if set(solution.packet_union()) != set(sfm.packet_ids):
        return False
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            u = masks[i] | masks[j]
            if not any((w & u).bit_count() > 1 for w in sfm.wants_masks):
                return False
    return True
