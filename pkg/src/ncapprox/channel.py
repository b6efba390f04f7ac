"""Packet-loss processes and a small in-process relay topology.

Two loss models: independent Bernoulli losses (BSC) and a two-state Markov
chain (Gilbert-Elliott) whose bad state always loses the packet, so the
stationary loss rate is p_gb / (p_gb + p_bg) and the mean burst length is
1 / p_bg.  Topologies are acyclic node/link graphs where sources emit their
own symbol, relays forward fresh random linear combinations of everything
they hold, and sinks accumulate innovative packets into decoding windows.
A single simulation run is sequential for replayability; independent runs
with different seeds can execute in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import DecoderState, Packet, recode
from .gf import GaloisField

__all__ = [
    "ChannelModel",
    "ChannelProcess",
    "Topology",
    "bsc_mask",
    "gec_mask",
    "run_topology",
]


@dataclass(frozen=True)
class ChannelModel:
    """Loss model for one link: 'lossless', 'bsc' or 'gec'."""

    kind: str
    loss_rate: float = 0.0  # BSC loss probability
    p_gb: float = 0.0       # GEC transition good -> bad
    p_bg: float = 1.0       # GEC transition bad -> good

    def __post_init__(self):
        if self.kind not in ("lossless", "bsc", "gec"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        for name in ("loss_rate", "p_gb", "p_bg"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @classmethod
    def lossless(cls) -> "ChannelModel":
        return cls("lossless")

    @classmethod
    def bsc(cls, loss_rate: float) -> "ChannelModel":
        return cls("bsc", loss_rate=loss_rate)

    @classmethod
    def gec(cls, p_gb: float, p_bg: float) -> "ChannelModel":
        return cls("gec", p_gb=p_gb, p_bg=p_bg)

    @classmethod
    def gec_from_observables(cls, loss_rate: float,
                             mean_burst_length: float) -> "ChannelModel":
        """Parameterise by the two observables the experiments control."""
        if not 0.0 <= loss_rate < 1.0:
            raise ValueError("loss rate must be in [0, 1)")
        if mean_burst_length < 1.0:
            raise ValueError("mean burst length must be >= 1")
        p_bg = 1.0 / mean_burst_length
        p_gb = loss_rate * p_bg / (1.0 - loss_rate)
        return cls("gec", p_gb=min(p_gb, 1.0), p_bg=p_bg)

    @property
    def stationary_loss_rate(self) -> float:
        if self.kind == "bsc":
            return self.loss_rate
        if self.kind == "gec":
            if self.p_gb == 0.0:
                return 0.0
            return self.p_gb / (self.p_gb + self.p_bg)
        return 0.0

    @property
    def mean_burst_length(self) -> float:
        if self.kind == "gec":
            return 1.0 / self.p_bg if self.p_bg > 0 else float("inf")
        if self.kind == "bsc":
            return 1.0 / (1.0 - self.loss_rate) if self.loss_rate < 1 else float("inf")
        return 0.0

    def process(self, rng: np.random.Generator) -> "ChannelProcess":
        return ChannelProcess(self, rng)

    @classmethod
    def parse(cls, tokens: list[str]) -> "ChannelModel":
        """Parse a link channel description from config tokens.

        Forms: ``lossless`` | ``bsc <p>`` | ``gec <loss_rate> <mean_burst>``
        | ``swept`` (placeholder replaced per sweep point).
        """
        kind = tokens[0]
        if kind == "lossless":
            return cls.lossless()
        if kind == "bsc":
            return cls.bsc(float(tokens[1]))
        if kind == "gec":
            return cls.gec_from_observables(float(tokens[1]), float(tokens[2]))
        if kind == "swept":
            return SWEPT
        raise ValueError(f"unknown channel spec {' '.join(tokens)!r}")


# Placeholder channel replaced by the sweep's (kind, rate) at run time.
SWEPT = ChannelModel("lossless")


class ChannelProcess:
    """Per-link loss state; GEC starts from its stationary distribution."""

    def __init__(self, model: ChannelModel, rng: np.random.Generator):
        self.model = model
        self._bad = False
        if model.kind == "gec":
            self._bad = bool(rng.random() < model.stationary_loss_rate)

    def is_lost(self, rng: np.random.Generator) -> bool:
        m = self.model
        if m.kind == "lossless":
            return False
        if m.kind == "bsc":
            return bool(rng.random() < m.loss_rate)
        lost = self._bad
        if self._bad:
            if rng.random() < m.p_bg:
                self._bad = False
        elif rng.random() < m.p_gb:
            self._bad = True
        return lost


def bsc_mask(p: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent loss indicators (True = lost)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"loss probability {p} outside [0, 1]")
    return rng.random(n) < p


def gec_mask(model: ChannelModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Markov loss trace of length n, started from the stationary state."""
    if model.kind != "gec":
        raise ValueError("gec_mask needs a gec channel model")
    proc = model.process(rng)
    out = np.empty(n, dtype=bool)
    for i in range(n):
        out[i] = proc.is_lost(rng)
    return out


@dataclass(frozen=True)
class Topology:
    """Acyclic directed relay graph with per-link channels.

    ``roles`` maps node id to 'source' | 'relay' | 'sink'; sources are
    numbered by declaration order, which fixes their coefficient column.
    ``recode_fan_in`` caps how many buffered packets one emission combines
    (most recent first); None combines everything a node holds.
    """

    roles: dict[str, str]
    links: tuple[tuple[str, str, ChannelModel], ...]
    recode_fan_in: int | None = None

    def __post_init__(self):
        for node, role in self.roles.items():
            if role not in ("source", "relay", "sink"):
                raise ValueError(f"node {node!r} has unknown role {role!r}")
        for src, dst, _ in self.links:
            if src not in self.roles or dst not in self.roles:
                raise ValueError(f"link {src}->{dst} references unknown nodes")
        order = self.topological_order()  # raises on cycles
        reachable = set(self.sources)
        for node in order:
            for src, dst, _ in self.links:
                if src == node and src in reachable:
                    reachable.add(dst)
        for sink in self.sinks:
            if sink not in reachable:
                raise ValueError(f"sink {sink!r} unreachable from any source")

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(n for n, r in self.roles.items() if r == "source")

    @property
    def sinks(self) -> tuple[str, ...]:
        return tuple(n for n, r in self.roles.items() if r == "sink")

    def topological_order(self) -> list[str]:
        """Kahn's algorithm with a sorted ready set, so order is stable."""
        indeg = {n: 0 for n in self.roles}
        for _, dst, _ in self.links:
            indeg[dst] += 1
        ready = sorted(n for n, d in indeg.items() if d == 0)
        out: list[str] = []
        while ready:
            node = ready.pop(0)
            out.append(node)
            for src, dst, _ in self.links:
                if src == node:
                    indeg[dst] -= 1
                    if indeg[dst] == 0:
                        ready.append(dst)
            ready.sort()
        if len(out) != len(self.roles):
            raise ValueError("topology contains a cycle")
        return out

    def with_swept_channels(self, channel: ChannelModel) -> "Topology":
        """Replace every 'swept' placeholder link with the given channel."""
        links = tuple(
            (s, d, channel if m is SWEPT else m) for s, d, m in self.links
        )
        return Topology(self.roles, links, self.recode_fan_in)

    @classmethod
    def from_lines(cls, lines: list[str],
                   recode_fan_in: int | None = None) -> "Topology":
        """Parse ``node <id> <role>`` and ``link <src> <dst> <channel>`` lines."""
        roles: dict[str, str] = {}
        links: list[tuple[str, str, ChannelModel]] = []
        for line in lines:
            tokens = line.split()
            if not tokens:
                continue
            if tokens[0] == "node":
                roles[tokens[1]] = tokens[2]
            elif tokens[0] == "link":
                links.append((tokens[1], tokens[2], ChannelModel.parse(tokens[3:])))
            else:
                raise ValueError(f"unknown topology line {line!r}")
        return cls(roles, tuple(links), recode_fan_in)


def run_topology(
    topology: Topology,
    windows: list[np.ndarray],
    fld: GaloisField,
    rng: np.random.Generator,
    packets_per_link: int = 2,
) -> dict[str, list[DecoderState]]:
    """Push each window through the topology; return per-sink decoder states.

    ``windows`` holds (N, w) arrays of field values, one row per source in
    declaration order.  Per window, nodes are visited in topological order:
    each emits ``packets_per_link`` fresh recoded packets on every outgoing
    link, the link's channel drops some, and sinks accumulate the rest.
    Starved sinks simply end up with low-rank states.
    """
    sources = topology.sources
    order = topology.topological_order()
    out: dict[str, list[DecoderState]] = {s: [] for s in topology.sinks}
    for window_id, x in enumerate(windows):
        x = np.atleast_2d(np.asarray(x, dtype=np.int64))
        if x.shape[0] != len(sources):
            raise ValueError(
                f"window has {x.shape[0]} rows for {len(sources)} sources"
            )
        n = len(sources)
        buffers: dict[str, list[Packet]] = {node: [] for node in topology.roles}
        for idx, src in enumerate(sources):
            coeffs = np.zeros(n, dtype=np.int64)
            coeffs[idx] = 1
            buffers[src].append(Packet(coeffs, x[idx], window_id, 0, fld))
        processes = {
            lk: model.process(rng) for lk, (_, _, model) in enumerate(topology.links)
        }
        for node in order:
            held = buffers[node]
            if not held or topology.roles[node] == "sink":
                continue
            for lk, (src, dst, _) in enumerate(topology.links):
                if src != node:
                    continue
                proc = processes[lk]
                pool = held if topology.recode_fan_in is None else held[
                    -topology.recode_fan_in:
                ]
                for _ in range(packets_per_link):
                    pkt = recode(pool, rng)
                    if not proc.is_lost(rng):
                        buffers[dst].append(pkt)
        for sink in topology.sinks:
            state = DecoderState(n, fld, window_id=window_id)
            for pkt in buffers[sink]:
                state.accumulate(pkt)
            out[sink].append(state)
    return out
