"""GF(2^m) arithmetic and the linear-algebra kernel for coded packets.

Payloads are byte vectors packing ``8 // m`` field symbols per byte, so the
same byte-table kernels serve every supported field: ``mul_table[c]`` maps a
whole packed byte through symbol-wise multiplication by ``c``. For m=1 the
coded-packet arithmetic degenerates to plain XOR.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import axpy, scale
from .errors import GFDivisionByZero, InconsistentSystem, LengthMismatch

# Standard reduction polynomials; x^8+x^4+x^3+x^2+1 for GF(256).
_POLY = {2: 0b111, 4: 0b10011, 8: 0b100011101}


class Field:
    """Finite field GF(2^m) for m in {1, 2, 4, 8}, with log/antilog tables."""

    __slots__ = ("m", "q", "poly", "_exp", "_log", "_inv", "mul_table")

    def __init__(self, m: int):
        if m not in (1, 2, 4, 8):
            raise ValueError(f"unsupported extension degree m={m}")
        self.m = m
        self.q = 1 << m
        self.poly = _POLY.get(m, 0b10)
        if m == 1:
            scalar = np.array([[0, 0], [0, 1]], dtype=np.uint8)
            self._exp = np.array([1], dtype=np.uint8)
            self._log = np.array([0, 0], dtype=np.uint8)
            self._inv = np.array([0, 1], dtype=np.uint8)
        else:
            order = self.q - 1
            exp = np.zeros(order, dtype=np.uint8)
            log = np.zeros(self.q, dtype=np.uint8)
            x = 1
            for i in range(order):
                exp[i] = x
                log[x] = i
                x <<= 1
                if x & self.q:
                    x ^= self.poly
            self._exp, self._log = exp, log
            self._inv = np.zeros(self.q, dtype=np.uint8)
            self._inv[1:] = exp[(order - log[1:].astype(np.int64)) % order]
            a = np.arange(self.q, dtype=np.int64)
            scalar = exp[(log[a][:, None].astype(np.int64)
                          + log[a][None, :].astype(np.int64)) % order]
            scalar[0, :] = 0
            scalar[:, 0] = 0
            scalar = scalar.astype(np.uint8)
        # Byte table: apply the scalar product to every packed symbol at once.
        symbols_per_byte = 8 // m
        bytes_ = np.arange(256, dtype=np.int64)
        table = np.zeros((self.q, 256), dtype=np.uint8)
        for i in range(symbols_per_byte):
            sub = (bytes_ >> (i * m)) & (self.q - 1)
            table |= scalar[:, sub] << np.uint8(i * m)
        self.mul_table = table

    def add(self, a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def inv(self, a: int) -> int:
        if a == 0:
            raise GFDivisionByZero("zero has no inverse")
        return int(self._inv[a])

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise GFDivisionByZero("division by zero")
        return self.mul(a, self.inv(b))

    def random_coeffs(self, n: int, gen: np.random.Generator) -> np.ndarray:
        """Uniform coefficient vector over the whole field, zero included."""
        return gen.integers(0, self.q, size=n, dtype=np.uint8)

    def __repr__(self):
        return f"Field(m={self.m})"


@lru_cache(maxsize=None)
def field(m: int) -> Field:
    """Shared per-degree field instance (tables are built once)."""
    return Field(m)


@dataclass(frozen=True)
class CodedPacket:
    """A linear combination of the packets of one sub-generation."""

    subgen_index: int
    packet_ids: tuple
    coefficients: np.ndarray
    payload: np.ndarray
    field_m: int


def as_payload(data) -> np.ndarray:
    """Coerce bytes-like or array input to a uint8 vector."""
    arr = np.frombuffer(data, dtype=np.uint8) if isinstance(data, (bytes, bytearray)) else np.asarray(data, dtype=np.uint8)
    if arr.ndim != 1:
        raise LengthMismatch("payload must be a flat byte vector")
    return arr


def encode(payloads, coeffs, fld: Field, subgen_index: int = 0,
           packet_ids=None) -> CodedPacket:
    """Combine packet payloads with the given coefficient vector."""
    payloads = [as_payload(p) for p in payloads]
    coeffs = np.asarray(coeffs, dtype=np.uint8)
    if len(coeffs) != len(payloads):
        raise LengthMismatch(
            f"{len(coeffs)} coefficients for {len(payloads)} packets")
    if payloads and any(len(p) != len(payloads[0]) for p in payloads):
        raise LengthMismatch("payload lengths differ")
    length = len(payloads[0]) if payloads else 0
    out = np.zeros(length, dtype=np.uint8)
    for c, p in zip(coeffs, payloads):
        if c:
            axpy(out, p, fld.mul_table[c])
    if packet_ids is None:
        packet_ids = tuple(range(len(payloads)))
    return CodedPacket(subgen_index, tuple(packet_ids), coeffs, out, fld.m)


def receiver_reduce(coded: CodedPacket, known, fld: Field) -> CodedPacket:
    """Subtract already-held packets out of a coded packet.

    ``known`` maps packet id -> payload. Coefficients of known packets become
    zero; the residual combination spans unknown packets only.
    """
    payload = coded.payload.copy()
    coeffs = coded.coefficients.copy()
    for pos, pid in enumerate(coded.packet_ids):
        c = int(coeffs[pos])
        if c and pid in known:
            kp = as_payload(known[pid])
            if len(kp) != len(payload):
                raise LengthMismatch("known payload length differs")
            axpy(payload, kp, fld.mul_table[c])
            coeffs[pos] = 0
    return CodedPacket(coded.subgen_index, coded.packet_ids, coeffs, payload,
                       coded.field_m)


class GaussianSolver:
    """Incremental Gaussian elimination over GF(2^m).

    Rows are payload-augmented coefficient vectors held in reduced
    row-echelon form, so innovation checks are O(rank) and the decoded
    payloads drop out as soon as the rank closes.
    """

    def __init__(self, fld: Field, n_unknowns: int, payload_len: int):
        self.fld = fld
        self.n = n_unknowns
        self.payload_len = payload_len
        self._rows = []
        self._pivots = {}  # column -> row index

    @property
    def rank(self) -> int:
        return len(self._rows)

    def add_row(self, coeffs, payload) -> bool:
        """Insert one reduced row; True if it was innovative."""
        coeffs = np.asarray(coeffs, dtype=np.uint8)
        payload = as_payload(payload)
        if len(coeffs) != self.n or len(payload) != self.payload_len:
            raise LengthMismatch("row dimensions disagree with the system")
        row = np.concatenate([coeffs, payload])
        tbl = self.fld.mul_table
        for col in sorted(self._pivots):
            c = int(row[col])
            if c:
                axpy(row, self._rows[self._pivots[col]], tbl[c])
        lead = -1
        for col in range(self.n):
            if row[col]:
                lead = col
                break
        if lead < 0:
            if row[self.n:].any():
                raise InconsistentSystem(
                    "zero combination with nonzero payload")
            return False
        f = self.fld.inv(int(row[lead]))
        if f != 1:
            scale(row, tbl[f])
        for r in self._rows:
            c = int(r[lead])
            if c:
                axpy(r, row, tbl[c])
        self._pivots[lead] = len(self._rows)
        self._rows.append(row)
        return True

    def solve(self):
        """Payloads per unknown column once the system is full rank."""
        if self.rank < self.n:
            return None
        return {col: self._rows[idx][self.n:].copy()
                for col, idx in self._pivots.items()}


def rank_and_solve(rows, payloads, fld: Field, n_unknowns: int | None = None):
    """Eliminate a batch of reduced rows; returns (rank, decoded or None)."""
    rows = [np.asarray(r, dtype=np.uint8) for r in rows]
    if n_unknowns is None:
        if not rows:
            raise LengthMismatch("cannot infer system size from zero rows")
        n_unknowns = len(rows[0])
    payloads = [as_payload(p) for p in payloads]
    if len(rows) != len(payloads):
        raise LengthMismatch("row/payload count mismatch")
    payload_len = len(payloads[0]) if payloads else 0
    solver = GaussianSolver(fld, n_unknowns, payload_len)
    for r, p in zip(rows, payloads):
        solver.add_row(r, p)
    return solver.rank, solver.solve()
