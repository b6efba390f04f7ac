"""RLNC encoding, recoding, and accumulation of packets into decoding windows.

A packet carries one coefficient row over the window's sources together with
the encoded payload (one value per sample position, so a window of w samples
shares a single coefficient row per packet).  A decoding window keeps only
innovative packets; rank bookkeeping lives in :class:`~ncapprox.linalg.RowBasis`.
Packets are immutable; a DecoderState has a single writer.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .gf import FieldMismatchError, GaloisField
from .linalg import RowBasis

__all__ = [
    "DecoderState",
    "Packet",
    "draw_coeffs",
    "encode",
    "flatten_positionwise",
    "packet_from_line",
    "packet_to_line",
    "recode",
]


@dataclass(frozen=True, eq=False)
class Packet:
    """One coded packet: coefficient row, payload vector, window/unit tags."""

    coeffs: np.ndarray
    payload: np.ndarray
    window_id: int = 0
    unit_id: int = 0
    field: GaloisField = dc_field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.int64)
        payload = np.atleast_1d(np.asarray(self.payload, dtype=np.int64))
        for arr in (coeffs, payload):
            if arr.ndim != 1:
                raise ValueError("coefficients and payload must be vectors")
            if arr.size and (arr.min() < 0 or arr.max() >= self.field.order):
                raise ValueError("entries outside the field")
            arr.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "payload", payload)

    @property
    def n_sources(self) -> int:
        return self.coeffs.shape[0]


def draw_coeffs(rng: np.random.Generator, n: int, fld: GaloisField) -> np.ndarray:
    """n independent uniform draws over the whole field, zero included."""
    if n < 1:
        raise ValueError("need at least one coefficient")
    return rng.integers(0, fld.order, size=n, dtype=np.int64)


def encode(x: np.ndarray, coeffs: np.ndarray, fld: GaloisField) -> np.ndarray:
    """Inner product of a coefficient row with the source values.

    ``x`` has one row per source; a 1-D ``x`` yields a scalar, an (N, w)
    ``x`` yields the length-w encoded payload.
    """
    x = np.asarray(x, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=np.int64)
    xx = x[:, None] if x.ndim == 1 else x
    if coeffs.shape[0] != xx.shape[0]:
        raise ValueError(f"{coeffs.shape[0]} coefficients for {xx.shape[0]} sources")
    acc = np.zeros(xx.shape[1], dtype=np.int64)
    for n in range(xx.shape[0]):
        acc ^= fld.scale(xx[n], int(coeffs[n]))
    return int(acc[0]) if x.ndim == 1 else acc


def recode(packets: list[Packet], rng: np.random.Generator) -> Packet:
    """Fresh random linear combination of the given packets.

    The same combining scalars act on coefficient rows and payloads, so any
    solution of the original system still satisfies the recoded equation.
    """
    if not packets:
        raise ValueError("cannot recode an empty packet list")
    first = packets[0]
    for p in packets[1:]:
        if p.window_id != first.window_id or p.unit_id != first.unit_id:
            raise ValueError("packets from different windows cannot be combined")
        if p.field != first.field:
            raise FieldMismatchError("packets from different fields")
    fld = first.field
    scalars = draw_coeffs(rng, len(packets), fld)
    coeffs = np.zeros_like(first.coeffs)
    payload = np.zeros_like(first.payload)
    for c, p in zip(scalars, packets):
        coeffs = coeffs ^ fld.scale(p.coeffs, int(c))
        payload = payload ^ fld.scale(p.payload, int(c))
    return Packet(coeffs, payload, first.window_id, first.unit_id, fld)


class DecoderState:
    """Innovative rows and payloads accumulated for one decoding window."""

    def __init__(self, n_sources: int, fld: GaloisField, window_id: int = 0,
                 unit_id: int = 0):
        self.n_sources = n_sources
        self.field = fld
        self.window_id = window_id
        self.unit_id = unit_id
        self.basis = RowBasis(n_sources, fld)
        self._rows: list[np.ndarray] = []
        self._payloads: list[np.ndarray] = []
        self._payload_len: int | None = None

    @property
    def rank(self) -> int:
        return self.basis.rank

    @property
    def is_complete(self) -> bool:
        return self.rank == self.n_sources

    @property
    def payload_len(self) -> int:
        return 1 if self._payload_len is None else self._payload_len

    def accumulate(self, packet: Packet) -> bool:
        """Store the packet iff its coefficient row is innovative."""
        if packet.field != self.field:
            raise FieldMismatchError("packet field differs from window field")
        if (packet.window_id, packet.unit_id) != (self.window_id, self.unit_id):
            raise ValueError("packet belongs to a different window")
        if packet.n_sources != self.n_sources:
            raise ValueError(
                f"{packet.n_sources} coefficients for {self.n_sources} sources"
            )
        if self._payload_len is None:
            self._payload_len = packet.payload.shape[0]
        elif packet.payload.shape[0] != self._payload_len:
            raise ValueError("payload length differs from earlier packets")
        if not self.basis.try_insert(packet.coeffs):
            return False
        self._rows.append(packet.coeffs)
        self._payloads.append(packet.payload)
        return True

    def coeff_matrix(self) -> np.ndarray:
        """Received innovative rows, in arrival order (K x N)."""
        if not self._rows:
            return np.zeros((0, self.n_sources), dtype=np.int64)
        return np.array(self._rows, dtype=np.int64)

    def payload_matrix(self) -> np.ndarray:
        """Payloads aligned with :meth:`coeff_matrix` (K x w)."""
        if not self._payloads:
            return np.zeros((0, self.payload_len), dtype=np.int64)
        return np.array(self._payloads, dtype=np.int64)

    @classmethod
    def from_rows(cls, rows: np.ndarray, payloads: np.ndarray, fld: GaloisField,
                  window_id: int = 0, unit_id: int = 0) -> "DecoderState":
        """Bulk-build a state from rows already known to be independent."""
        rows = np.asarray(rows, dtype=np.int64)
        payloads = np.asarray(payloads, dtype=np.int64)
        state = cls(rows.shape[1], fld, window_id, unit_id)
        state.basis = RowBasis.from_independent_rows(rows, fld)
        state._rows = [r for r in rows]
        state._payloads = [p for p in np.atleast_2d(payloads)]
        state._payload_len = state._payloads[0].shape[0] if state._payloads else None
        return state


def flatten_positionwise(state: DecoderState) -> DecoderState:
    """Expand vector payloads into a scalar system over (source, position) pairs.

    Each stored row with payload length w becomes w rows over N*w unknowns,
    indexed source-major (source n, position t) -> n*w + t.  Needed when
    constraints couple different sample positions, e.g. motion-compensated
    pixel matches; the expanded rows stay independent whenever the original
    rows were.
    """
    K = state.rank
    N = state.n_sources
    w = state.payload_len
    if K == 0:
        return DecoderState(N * w, state.field, state.window_id, state.unit_id)
    rows = state.coeff_matrix()
    payloads = state.payload_matrix()
    flat = np.zeros((K, w, N, w), dtype=np.int64)
    for t in range(w):
        flat[:, t, :, t] = rows
    flat = flat.reshape(K * w, N * w)
    return DecoderState.from_rows(
        flat, payloads.reshape(K * w, 1), state.field,
        state.window_id, state.unit_id,
    )


def packet_to_line(p: Packet) -> str:
    """Trace-file form: window, unit, hex coefficient row, hex payload."""
    coeffs = " ".join(f"{int(v):x}" for v in p.coeffs)
    payload = " ".join(f"{int(v):x}" for v in p.payload)
    return f"{p.window_id},{p.unit_id},{coeffs},{payload}"


def packet_from_line(line: str, fld: GaloisField) -> Packet:
    window_id, unit_id, coeffs, payload = line.strip().split(",")
    return Packet(
        np.array([int(v, 16) for v in coeffs.split()], dtype=np.int64),
        np.array([int(v, 16) for v in payload.split()], dtype=np.int64),
        int(window_id),
        int(unit_id),
        fld,
    )
