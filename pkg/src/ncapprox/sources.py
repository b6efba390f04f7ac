"""Correlated source generators and similarity extraction.

Three source families: Gaussian-perturbed copies of a base value, time
shifted and energy scaled variants of a base waveform (a stand-in for
co-located sensor captures), and grayscale frame patches whose similarity
comes from exhaustive block matching.  Generators are pure given their rng;
patch operations are data-parallel across patches.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decoder import SimilarityModel

__all__ = [
    "PatchSet",
    "SignalWindow",
    "block_match",
    "block_match_similarity",
    "frame_pair_similarity",
    "gen_gaussian_correlated",
    "gen_shifted_scaled",
    "read_pgm",
    "read_signal_csv",
    "split_into_patches",
    "synthetic_base_signal",
    "synthetic_frames",
    "write_pgm",
    "write_signal_csv",
    "write_similarity_csv",
]


@dataclass(frozen=True)
class SignalWindow:
    """w samples per source for N sources, clipped to [0, 2^bits)."""

    values: np.ndarray  # (N, w) integers
    bits: int

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=np.int64))
        if values.ndim != 2:
            raise ValueError("signal window must be (sources, samples)")
        if values.size and (values.min() < 0 or values.max() >= (1 << self.bits)):
            raise ValueError(f"samples outside [0, 2^{self.bits})")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_sources(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]


def _clip(values: np.ndarray, bits: int) -> np.ndarray:
    return np.clip(np.rint(values), 0, (1 << bits) - 1).astype(np.int64)


def gen_gaussian_correlated(
    n_sources: int,
    base_value: float,
    sigmas,
    rng: np.random.Generator,
    bits: int,
) -> SignalWindow:
    """Source 1 is the base value; source i adds zero-mean noise of width sigma_i."""
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if sigmas.shape != (n_sources - 1,):
        raise ValueError(f"need {n_sources - 1} sigmas, got {sigmas.shape}")
    if np.any(sigmas < 0):
        raise ValueError("sigmas must be nonnegative")
    vals = np.empty((n_sources, 1), dtype=np.float64)
    vals[0, 0] = base_value
    vals[1:, 0] = base_value + rng.normal(0.0, 1.0, n_sources - 1) * sigmas
    return SignalWindow(_clip(vals, bits), bits)


def synthetic_base_signal(length: int, rng: np.random.Generator, bits: int,
                          components: int = 4) -> np.ndarray:
    """Smooth bandlimited waveform spanning most of [0, 2^bits); float array."""
    t = np.arange(length) / length
    out = np.zeros(length)
    for k in range(1, components + 1):
        amp = rng.uniform(0.4, 1.0) / k
        phase = rng.uniform(0, 2 * np.pi)
        out += amp * np.sin(2 * np.pi * k * t + phase)
    out -= out.min()
    peak = out.max()
    if peak > 0:
        out /= peak
    return out * ((1 << bits) - 1) * 0.9 + (1 << bits) * 0.05


def gen_shifted_scaled(
    base_signal: np.ndarray,
    shifts,
    scales,
    rng: np.random.Generator,
    bits: int,
    noise_std: float = 0.0,
) -> SignalWindow:
    """Each source is the base waveform, circularly shifted and energy scaled.

    Similarity falls off with the shift gap and the scale gap, mimicking
    sensors that observe the same event from increasing distances.
    """
    base = np.asarray(base_signal, dtype=np.float64)
    shifts = list(shifts)
    scales = list(scales)
    if len(shifts) != len(scales):
        raise ValueError("one shift and one scale per source")
    if any(abs(s) >= base.shape[0] for s in shifts):
        raise ValueError("shift magnitudes must stay below the window length")
    rows = []
    for shift, scale in zip(shifts, scales):
        row = scale * np.roll(base, shift)
        if noise_std > 0:
            row = row + rng.normal(0.0, noise_std, base.shape[0])
        rows.append(row)
    return SignalWindow(_clip(np.array(rows), bits), bits)


@dataclass(frozen=True)
class PatchSet:
    """N grayscale frames cut into an aligned grid of square patches."""

    frames: np.ndarray  # (N, H, W) integers in [0, 255]
    patch_size: int

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.int64)
        if frames.ndim != 3:
            raise ValueError("frames must be (count, height, width)")
        L = self.patch_size
        if frames.shape[1] % L or frames.shape[2] % L:
            raise ValueError(
                f"frame size {frames.shape[1]}x{frames.shape[2]} is not a"
                f" multiple of the patch size {L}"
            )
        if frames.size and (frames.min() < 0 or frames.max() > 255):
            raise ValueError("pixels outside [0, 255]")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def grid(self) -> tuple[int, int]:
        L = self.patch_size
        return self.frames.shape[1] // L, self.frames.shape[2] // L

    @property
    def n_patches(self) -> int:
        rows, cols = self.grid
        return rows * cols

    def patch_origin(self, p: int) -> tuple[int, int]:
        rows, cols = self.grid
        if not 0 <= p < rows * cols:
            raise IndexError(f"patch {p} outside grid {rows}x{cols}")
        return (p // cols) * self.patch_size, (p % cols) * self.patch_size

    def patch_block(self, n: int, p: int) -> np.ndarray:
        y, x = self.patch_origin(p)
        L = self.patch_size
        return self.frames[n, y : y + L, x : x + L]

    def patch_vectors(self, p: int) -> np.ndarray:
        """All frames' pixels of patch p, row-major flattened: (N, L*L)."""
        y, x = self.patch_origin(p)
        L = self.patch_size
        return self.frames[:, y : y + L, x : x + L].reshape(self.n_frames, L * L)

    def frame_from_patches(self, patch_values: np.ndarray) -> np.ndarray:
        """Reassemble one frame from per-patch flattened vectors (P, L*L)."""
        rows, cols = self.grid
        L = self.patch_size
        out = np.zeros((rows * L, cols * L), dtype=np.int64)
        for p in range(self.n_patches):
            y, x = self.patch_origin(p)
            out[y : y + L, x : x + L] = np.asarray(patch_values[p]).reshape(L, L)
        return out


def split_into_patches(frames: np.ndarray, patch_size: int) -> PatchSet:
    """Deterministic row-major patch grid over a stack of frames."""
    return PatchSet(np.asarray(frames), patch_size)


def synthetic_frames(
    n_frames: int,
    height: int,
    width: int,
    rng: np.random.Generator,
    drift: float = 1.0,
    noise_std: float = 4.0,
) -> np.ndarray:
    """Smooth moving pattern plus pixel noise; consecutive frames similar."""
    yy, xx = np.mgrid[0:height, 0:width]
    fy = rng.uniform(1.0, 2.0)
    fx = rng.uniform(1.0, 2.0)
    phase = rng.uniform(0, 2 * np.pi)
    frames = np.empty((n_frames, height, width))
    for n in range(n_frames):
        off = drift * n
        base = np.sin(2 * np.pi * fy * (yy + off) / height + phase)
        base += np.cos(2 * np.pi * fx * (xx + 0.7 * off) / width)
        frames[n] = (base + 2.0) / 4.0 * 255.0
        if noise_std > 0:
            frames[n] += rng.normal(0.0, noise_std, (height, width))
    return np.clip(np.rint(frames), 0, 255).astype(np.int64)


def block_match(patchset: PatchSet, search_radius: int):
    """Exhaustive motion search between consecutive frames, per patch.

    Returns (motions, distances): motions[(n, p)] is the (dy, dx) that
    minimises the sum of absolute differences between patch p of frame n
    and the displaced window of frame n+1 (window kept inside the frame);
    distances holds the matching per-pixel mean absolute difference.  Ties
    prefer the smallest displacement, so radius 0 is the zero-motion model.
    """
    if search_radius < 0:
        raise ValueError("search radius must be >= 0")
    N = patchset.n_frames
    P = patchset.n_patches
    L = patchset.patch_size
    H, W = patchset.frames.shape[1:]
    motions = np.zeros((max(N - 1, 0), P, 2), dtype=np.int64)
    dists = np.zeros((max(N - 1, 0), P), dtype=np.float64)
    for n in range(N - 1):
        nxt = patchset.frames[n + 1]
        for p in range(P):
            y, x = patchset.patch_origin(p)
            ref = patchset.patch_block(n, p)
            best = None
            for dy in range(-search_radius, search_radius + 1):
                ty = y + dy
                if ty < 0 or ty + L > H:
                    continue
                for dx in range(-search_radius, search_radius + 1):
                    tx = x + dx
                    if tx < 0 or tx + L > W:
                        continue
                    sad = int(np.abs(ref - nxt[ty : ty + L, tx : tx + L]).sum())
                    key = (sad, abs(dy) + abs(dx), dy, dx)
                    if best is None or key < best:
                        best = key
            assert best is not None  # (0, 0) is always inside the frame
            sad, _, dy, dx = best
            motions[n, p] = (dy, dx)
            dists[n, p] = sad / (L * L)
    return motions, dists


def block_match_similarity(patchset: PatchSet, search_radius: int) -> list[SimilarityModel]:
    """Pixel-level similarity models, one per patch.

    For every consecutive frame pair the matched motion maps pixel b1 of
    frame n onto pixel b2 of frame n+1; matches that leave the patch are
    dropped.  Unknown indexing is frame-major: (frame n, pixel b) -> n*L*L + b.
    Every pair from one matched block shares that block's mean absolute
    difference as its expected distance.
    """
    motions, dists = block_match(patchset, search_radius)
    N = patchset.n_frames
    L = patchset.patch_size
    models = []
    for p in range(patchset.n_patches):
        pairs = []
        for n in range(N - 1):
            dy, dx = motions[n, p]
            dist = float(dists[n, p])
            for by in range(L):
                ty = by + dy
                if ty < 0 or ty >= L:
                    continue
                for bx in range(L):
                    tx = bx + dx
                    if tx < 0 or tx >= L:
                        continue
                    b1 = by * L + bx
                    b2 = ty * L + tx
                    pairs.append((n * L * L + b1, (n + 1) * L * L + b2, dist))
        models.append(SimilarityModel.from_pairs(pairs, N * L * L))
    return models


def frame_pair_similarity(patchset: PatchSet) -> list[SimilarityModel]:
    """Frame-level similarity per patch: all frame pairs ranked by their
    zero-displacement mean absolute difference.

    Suits position-wise decoding, where one constraint row forces a whole
    frame pair equal at every pixel of the patch.
    """
    N = patchset.n_frames
    models = []
    for p in range(patchset.n_patches):
        vecs = patchset.patch_vectors(p)
        pairs = []
        for i in range(N):
            for j in range(i + 1, N):
                mad = float(np.abs(vecs[i] - vecs[j]).mean())
                pairs.append((i, j, mad))
        models.append(SimilarityModel.from_pairs(pairs, N))
    return models


# -- file formats ------------------------------------------------------------


def read_pgm(path) -> np.ndarray:
    """Binary 8-bit grayscale PGM (P5) reader."""
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"not a binary PGM file: magic {fields[0]!r}")
    width, height, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError("only 8-bit PGM is supported")
    pos += 1  # single whitespace after the header
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return pixels.reshape(height, width).astype(np.int64)


def write_pgm(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 2 or image.min() < 0 or image.max() > 255:
        raise ValueError("need a 2-D image with pixels in [0, 255]")
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(image.astype(np.uint8).tobytes())


def write_signal_csv(window: SignalWindow, path) -> None:
    """One column per source, one row per sample position."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"source_{i}" for i in range(window.n_sources)) + "\n")
        for t in range(window.length):
            fh.write(",".join(str(int(v)) for v in window.values[:, t]) + "\n")


def read_signal_csv(path, bits: int) -> SignalWindow:
    rows = Path(path).read_text().strip().splitlines()
    data = [[int(v) for v in line.split(",")] for line in rows[1:]]
    return SignalWindow(np.array(data, dtype=np.int64).T, bits)


def write_similarity_csv(models: list[SimilarityModel], path) -> None:
    """Rows of ``patch,p_i,p_j,distance`` across all patch models."""
    with open(path, "w", newline="") as fh:
        fh.write("patch,p_i,p_j,distance\n")
        for p, model in enumerate(models):
            for i, j, d in model.pairs:
                fh.write(f"{p},{i},{j},{d!r}\n")
