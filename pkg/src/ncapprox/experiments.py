"""Configured sweeps that drive the library and emit CSV result tables.

Every sweep is deterministic given (config, seed): trial t of sweep point p
draws from ``numpy.random.default_rng([seed, p..., t])``, aggregation order
is fixed, and floats are serialised with ``repr``, so reruns are
byte-identical.  Each row carries the resolved configuration hash.  Trials
are independent streams and may be parallelised externally without
changing any result.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .analysis import ErrorModelParams, expected_abs_error, pmf_decoding_error, \
    pmf_info_loss
from .channel import ChannelModel
from .codec import DecoderState, Packet, draw_coeffs, encode
from .config import ConfigError, ExperimentConfig
from .decoder import RetryPolicy, SimilarityModel, decode, mle_decode
from .gf import GaloisField, field
from .sources import frame_pair_similarity, gen_gaussian_correlated, \
    gen_shifted_scaled, split_into_patches, synthetic_base_signal, synthetic_frames

__all__ = [
    "SweepResult",
    "run_analysis_tables",
    "run_field_sweep",
    "run_loss_sweep",
    "run_mle_comparison",
    "run_similarity_sweep",
    "run_window_sweep",
    "write_csv",
    "write_plot_script",
]


@dataclass
class SweepResult:
    """A result table plus optional sidecar tables (traces, timings)."""

    name: str
    header: list[str]
    rows: list[list]
    config_hash: str
    sidecars: dict[str, tuple[list[str], list[list]]] = dc_field(default_factory=dict)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return repr(float(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    raise TypeError(f"cannot format {type(v).__name__} deterministically")


def write_csv(path, header: list[str], rows: list[list], config_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header + ["config_hash"]) + "\n")
        for row in rows:
            fh.write(",".join([_fmt(v) for v in row] + [config_hash]) + "\n")


def write_result(result: SweepResult, out_path) -> list[Path]:
    """Write the main table and any sidecars; returns the paths written."""
    out_path = Path(out_path)
    write_csv(out_path, result.header, result.rows, result.config_hash)
    written = [out_path]
    for name, (header, rows) in sorted(result.sidecars.items()):
        side = out_path.with_name(f"{out_path.stem}.{name}.csv")
        write_csv(side, header, rows, result.config_hash)
        written.append(side)
    return written


def _rng(seed: int, *indices: int) -> np.random.Generator:
    return np.random.default_rng([seed, *indices])


def _mean_ci95(samples: np.ndarray) -> tuple[float, float]:
    mean = float(samples.mean())
    if samples.size < 2:
        return mean, 0.0
    sem = float(samples.std(ddof=1)) / np.sqrt(samples.size)
    return mean, 1.96 * sem


def _alphabet_mean(r: int) -> int:
    return ((1 << r) - 1) // 2


def _collect_innovative(state: DecoderState, x: np.ndarray, k_target: int,
                        rng: np.random.Generator, max_draws: int = 10_000) -> None:
    """Draw fresh coded packets until the state holds k_target innovative rows."""
    fld = state.field
    n = state.n_sources
    for _ in range(max_draws):
        if state.rank >= k_target:
            return
        coeffs = draw_coeffs(rng, n, fld)
        payload = encode(x, coeffs, fld)
        state.accumulate(Packet(coeffs, np.atleast_1d(payload), state.window_id,
                                state.unit_id, fld))
    raise RuntimeError(f"rank {state.rank} < {k_target} after {max_draws} draws")


def _shift_scale_model(shifts, scales) -> SimilarityModel:
    """Pairwise expected distances from the generator geometry.

    Similarity shrinks with the time-shift gap and the energy-scale gap;
    the exact magnitudes only matter through their ranking.
    """
    n = len(shifts)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            dist = abs(shifts[i] - shifts[j]) + 100.0 * abs(scales[i] - scales[j])
            pairs.append((i, j, dist))
    return SimilarityModel.from_pairs(pairs, n)


def _gaussian_model(sigmas) -> SimilarityModel:
    """Pairwise distances for sources that are noisy copies of source 0."""
    widths = [0.0] + [float(s) for s in sigmas]
    n = len(widths)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            pairs.append((i, j, float(np.hypot(widths[i], widths[j]))))
    return SimilarityModel.from_pairs(pairs, n)


# -- field-size sweep ---------------------------------------------------------


def run_field_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Empirical MSE against discarded-bit count, next to the analytic curve.

    Fixed reception ratio (K of N innovative packets); reconstruction error
    per trial is averaged over all samples and normalised by (2^r - 1)^2.
    """
    source = cfg.get_str("source", required=True)
    r = cfg.get_int("r", required=True)
    trials = cfg.trials(200)
    fraction = cfg.get_fraction("receive_fraction", Fraction(2, 3))

    if source == "shifted_scaled":
        n = cfg.get_int("n_sources", 3)
        w = cfg.get_int("window", 300)
        shifts = cfg.get_int_list("shifts", required=True)
        scales = cfg.get_float_list("scales", [1.0] * n)
        noise = cfg.get_float("noise_std", 1.0)
        if len(shifts) != n or len(scales) != n:
            raise ConfigError("shifts and scales must list one value per source")
        model = _shift_scale_model(shifts, scales)

        def make_trial(rng, t):
            base = synthetic_base_signal(w, rng, r)
            win = gen_shifted_scaled(base, shifts, scales, rng, r, noise)
            return win.values, model

    elif source == "patches":
        if r != 8:
            raise ConfigError("patch sources are 8-bit grayscale; set r = 8")
        n = cfg.get_int("n_frames", 3)
        L = cfg.get_int("patch_size", 4)
        height = cfg.get_int("frame_height", 16)
        width = cfg.get_int("frame_width", 16)
        drift = cfg.get_float("drift", 0.5)
        noise = cfg.get_float("noise_std", 3.0)
        n_patches = (height // L) * (width // L)

        def make_trial(rng, t):
            frames = synthetic_frames(n, height, width, rng, drift, noise)
            ps = split_into_patches(frames, L)
            p = t % n_patches
            return ps.patch_vectors(p), frame_pair_similarity(ps)[p]

    else:
        raise ConfigError(f"unknown source kind {source!r}")

    k_target = min(max(int(round(fraction * n)), 1), n)
    fill = _alphabet_mean(r)
    norm = float((1 << r) - 1) ** 2
    cfg.reject_unknown_keys()

    rows = []
    for z in range(r):
        fld = field(r, z)
        analytic = expected_abs_error(ErrorModelParams(r, z))
        per_trial = np.empty(trials)
        failures = 0
        for t in range(trials):
            rng = _rng(cfg.seed, z, t)
            values, model_t = make_trial(rng, t)
            x = fld.embed_array(values)
            state = DecoderState(n, fld)
            _collect_innovative(state, x, k_target, rng)
            result = decode(state, model_t, RetryPolicy(fill_value=fill))
            if result.mode == "failed":
                failures += 1
            diff = values.astype(np.float64) - result.s_hat
            per_trial[t] = float((diff * diff).mean())
        mean, ci = _mean_ci95(per_trial)
        rows.append([z, mean / norm, ci / norm, analytic, failures])
    header = ["z", "normalized_mse_empirical", "normalized_mse_ci95",
              "E_abs_analytic", "failed_trials"]
    return SweepResult("field-sweep", header, rows, cfg.config_hash)


# -- similarity sweep ---------------------------------------------------------


def run_similarity_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Mean l1 error of constraining the closer pair versus a farther pair.

    Three sources, one packet of three lost; both constraint choices decode
    the same received instances.
    """
    r = cfg.get_int("r", 8)
    fld = cfg.field_for()
    base = cfg.get_float("base_value", float(1 << (r - 1)))
    sigma_fixed = cfg.get_float("sigma_fixed", 0.2)
    sweep = cfg.get_float_list("sigma_sweep", required=True)
    trials = cfg.trials(10_000)
    max_redraws = cfg.get_int("max_redraws", 64)
    trace_sigmas = cfg.get_float_list("trace_sigmas")
    trace_trials = cfg.get_int("trace_trials", 50)
    cfg.reject_unknown_keys()

    model_near = SimilarityModel.from_pairs([(0, 1, 0.0)], 3)
    model_far = SimilarityModel.from_pairs([(0, 2, 0.0)], 3)

    def run_instance(rng, sigma2, sigma3):
        win = gen_gaussian_correlated(3, base, [sigma2, sigma3], rng, r)
        x = fld.embed_array(win.values)
        for _ in range(max_redraws):
            state = DecoderState(3, fld)
            _collect_innovative(state, x, 2, rng)
            res_near = decode(state, model_near, RetryPolicy(max_retries=1))
            res_far = decode(state, model_far, RetryPolicy(max_retries=1))
            if res_near.mode != "failed" and res_far.mode != "failed":
                err_near = float(np.abs(win.values - res_near.s_hat).sum())
                err_far = float(np.abs(win.values - res_far.s_hat).sum())
                return err_near, err_far
        raise RuntimeError("no jointly solvable instance after redraw budget")

    rows = []
    for si, sigma3 in enumerate(sweep):
        errs = np.empty((trials, 2))
        for t in range(trials):
            errs[t] = run_instance(_rng(cfg.seed, si, t), sigma_fixed, sigma3)
        mean_near, ci_near = _mean_ci95(errs[:, 0])
        mean_far, ci_far = _mean_ci95(errs[:, 1])
        rows.append([sigma3, mean_near, ci_near, mean_far, ci_far])
    header = ["sigma3", "l1_mean_near_pair", "l1_ci95_near_pair",
              "l1_mean_far_pair", "l1_ci95_far_pair"]
    result = SweepResult("similarity-sweep", header, rows, cfg.config_hash)

    if trace_sigmas:
        if len(trace_sigmas) != 2:
            raise ConfigError("trace_sigmas takes exactly two values")
        t_rows = []
        for t in range(trace_trials):
            e = run_instance(_rng(cfg.seed, 1 << 20, t), *trace_sigmas)
            t_rows.append([t, e[0], e[1]])
        result.sidecars["traces"] = (
            ["trial", "l1_near_pair", "l1_far_pair"], t_rows
        )
    return result


# -- window-size sweep ----------------------------------------------------------


def run_window_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Window size against MSE and the rate of unsolvable systems.

    Lossless mode sends a packet budget proportional to the window size and
    counts windows whose received rows never reach full rank (the only error
    source besides resolution loss).  Lossy mode drops packets independently
    and lets the similarity constraints patch up the shortfall, exposing the
    error-containment versus singularity trade-off.
    """
    mode = cfg.get_str("mode", "lossless")
    if mode not in ("lossless", "lossy"):
        raise ConfigError(f"unknown window sweep mode {mode!r}")
    sizes = cfg.get_int_list("window_sizes", [3, 4, 6, 8, 12])
    n_frames = cfg.get_int("n_frames", 24)
    for n in sizes:
        if n_frames % n:
            raise ConfigError(f"window size {n} does not divide {n_frames} frames")
    r = cfg.get_int("r", 8)
    if r != 8:
        raise ConfigError("frame sources are 8-bit grayscale; set r = 8")
    z = cfg.get_int("z", 0)
    fld = cfg.field_for()
    height = cfg.get_int("frame_height", 16)
    width = cfg.get_int("frame_width", 16)
    L = cfg.get_int("patch_size", 4)
    drift = cfg.get_float("drift", 0.5)
    noise = cfg.get_float("noise_std", 3.0)
    budget_factor = cfg.get_float("budget_factor", 2.0)
    loss_rate = cfg.get_float("loss_rate", 1.0 / 24.0)
    trials = cfg.trials(1000)
    fill = _alphabet_mean(r)
    cfg.reject_unknown_keys()

    frames = synthetic_frames(n_frames, height, width,
                              _rng(cfg.seed, 0xF0), drift, noise)
    rows = []
    for n in sizes:
        groups = [split_into_patches(frames[g * n : (g + 1) * n], L)
                  for g in range(n_frames // n)]
        models = [frame_pair_similarity(ps) for ps in groups]
        m_sent = max(n, int(round(budget_factor * n)))
        failures = 0
        per_trial = np.empty(trials)
        for t in range(trials):
            rng = _rng(cfg.seed, n, t)
            g = t % len(groups)
            ps = groups[g]
            p = (t // len(groups)) % ps.n_patches
            truth = ps.patch_vectors(p)
            x = fld.embed_array(truth)
            state = DecoderState(n, fld)
            for _ in range(m_sent):
                coeffs = draw_coeffs(rng, n, fld)
                lost = mode == "lossy" and bool(rng.random() < loss_rate)
                if not lost:
                    state.accumulate(Packet(coeffs, encode(x, coeffs, fld),
                                            field=fld))
            if mode == "lossless":
                if state.is_complete:
                    s_hat = decode(state).s_hat
                else:
                    failures += 1
                    s_hat = np.full_like(truth, fill)
            else:
                if state.rank == 0:
                    failures += 1
                    s_hat = np.full_like(truth, fill)
                else:
                    res = decode(state, models[g][p], RetryPolicy(fill_value=fill))
                    if res.mode == "failed":
                        failures += 1
                    s_hat = res.s_hat
            diff = truth.astype(np.float64) - s_hat
            per_trial[t] = float((diff * diff).mean())
        mean, ci = _mean_ci95(per_trial)
        rows.append([n, mean, ci, failures / trials])
    header = ["window_size", "mse", "mse_ci95", "singular_rate"]
    return SweepResult("window-sweep", header, rows, cfg.config_hash)


# -- loss-rate sweep -------------------------------------------------------------


def run_loss_sweep(cfg: ExperimentConfig) -> SweepResult:
    """MSE against average loss rate for Bernoulli and bursty channels.

    The configured topology marks the links under study as ``swept``; each
    sweep point instantiates them with the channel kind and rate.  Both
    channel kinds replay identical source data per (rate, trial).
    """
    topo = cfg.topology()
    rates = cfg.get_float_list("loss_rates", required=True)
    burst = cfg.get_float("mean_burst_length", 9.0)
    r = cfg.get_int("r", required=True)
    fld = cfg.field_for()
    w = cfg.get_int("window", 32)
    n = len(topo.sources)
    shifts = cfg.get_int_list("shifts", list(range(0, 4 * n, 4)))
    scales = cfg.get_float_list("scales", [1.0 - 0.05 * i for i in range(n)])
    noise = cfg.get_float("noise_std", 1.0)
    if len(shifts) != n or len(scales) != n:
        raise ConfigError("shifts and scales must list one value per source")
    ppl = cfg.get_int("packets_per_link", 2)
    trials = cfg.trials(100)
    fill = _alphabet_mean(r)
    cfg.reject_unknown_keys()

    from .channel import run_topology

    model = _shift_scale_model(shifts, scales)
    rows = []
    for kind in ("bsc", "gec"):
        for ri, rate in enumerate(rates):
            if kind == "bsc":
                channel = ChannelModel.bsc(rate)
            else:
                channel = ChannelModel.gec_from_observables(rate, burst)
            topo_rt = topo.with_swept_channels(channel)
            per_trial = np.empty(trials)
            failures = 0
            for t in range(trials):
                rng = _rng(cfg.seed, ri, t)  # shared across kinds on purpose
                base = synthetic_base_signal(w, rng, r)
                win = gen_shifted_scaled(base, shifts, scales, rng, r, noise)
                x = fld.embed_array(win.values)
                states = run_topology(topo_rt, [x], fld, rng, ppl)
                truth = win.values.astype(np.float64)
                errs = []
                for sink in topo_rt.sinks:
                    state = states[sink][0]
                    if state.rank == 0:
                        failures += 1
                        s_hat = np.full_like(win.values, fill)
                    else:
                        res = decode(state, model, RetryPolicy(fill_value=fill))
                        if res.mode == "failed":
                            failures += 1
                        s_hat = res.s_hat
                    diff = truth - s_hat
                    errs.append(float((diff * diff).mean()))
                per_trial[t] = float(np.mean(errs))
            mean, ci = _mean_ci95(per_trial)
            rows.append([kind, rate, mean, ci, failures / (trials * len(topo_rt.sinks))])
    header = ["channel_kind", "loss_rate", "mse", "mse_ci95", "failure_rate"]
    return SweepResult("loss-sweep", header, rows, cfg.config_hash)


# -- exhaustive-baseline comparison ------------------------------------------------


def run_mle_comparison(cfg: ExperimentConfig) -> SweepResult:
    """Constraint-based decoding against the exhaustive baseline.

    Identical instances and seeds feed both decoders.  Wall-clock averages
    go to a ``timings`` sidecar so the main table stays byte-reproducible.
    Field sizes whose enumeration would exceed the budget produce a skipped
    row instead of timings.
    """
    r = cfg.get_int("r", 8)
    zs = cfg.get_int_list("z_values", [3, 4, 5, 6])
    n = cfg.get_int("n_sources", 4)
    k = cfg.get_int("k_received", 2)
    if not 1 <= k < n:
        raise ConfigError("need 1 <= k_received < n_sources")
    sigmas = cfg.get_float_list("sigmas", [float(2 ** i) for i in range(1, n)])
    if len(sigmas) != n - 1:
        raise ConfigError("sigmas must list one value per non-reference source")
    base = cfg.get_float("base_value", float(1 << (r - 1)))
    budget = cfg.get_int("budget", 1 << 16)
    trials = cfg.trials(200)
    fill = _alphabet_mean(r)
    cfg.reject_unknown_keys()

    model = _gaussian_model(sigmas)
    rows = []
    timing_rows = []
    for zi, z in enumerate(zs):
        fld = field(r, z)
        skipped = fld.order ** (n - k) > budget
        instances = []
        for t in range(trials):
            rng = _rng(cfg.seed, zi, t)
            win = gen_gaussian_correlated(n, base, sigmas, rng, r)
            x = fld.embed_array(win.values)
            state = DecoderState(n, fld)
            _collect_innovative(state, x, k, rng)
            instances.append((win.values.astype(np.float64), state))

        t0 = time.perf_counter()
        approx = [decode(state, model, RetryPolicy(fill_value=fill))
                  for _, state in instances]
        time_approx = (time.perf_counter() - t0) / trials
        mse_approx = float(np.mean([
            ((truth - res.s_hat) ** 2).mean() for (truth, _), res in
            zip(instances, approx)
        ]))

        if skipped:
            rows.append([z, mse_approx, "", "skipped"])
            continue
        t0 = time.perf_counter()
        mle = [mle_decode(state, model, budget) for _, state in instances]
        time_mle = (time.perf_counter() - t0) / trials
        mse_mle = float(np.mean([
            ((truth - res.s_hat) ** 2).mean() for (truth, _), res in
            zip(instances, mle)
        ]))
        rows.append([z, mse_approx, mse_mle, "ok"])
        timing_rows.append([z, time_approx, time_mle])
    header = ["z", "mse_approx", "mse_mle", "status"]
    result = SweepResult("mle-comparison", header, rows, cfg.config_hash)
    result.sidecars["timings"] = (
        ["z", "time_approx_seconds", "time_mle_seconds"], timing_rows
    )
    return result


# -- analytic tables ----------------------------------------------------------------


def run_analysis_tables(cfg: ExperimentConfig) -> SweepResult:
    """Closed-form expected error next to its convolution cross-check."""
    r_values = cfg.get_int_list("r_values", list(range(1, 11)))
    cfg.reject_unknown_keys()
    rows = []
    for r in r_values:
        for z in range(r):
            params = ErrorModelParams(r, z)
            conv = pmf_decoding_error(params).convolve(pmf_info_loss(params))
            rows.append([
                r, z, params.a, params.b, params.H,
                expected_abs_error(params), conv.expectation_abs(),
            ])
    header = ["r", "z", "a", "b", "H", "E_abs_closed", "E_abs_convolution"]
    return SweepResult("analysis-tables", header, rows, cfg.config_hash)


# -- plotting helper -----------------------------------------------------------------

_PLOT_SPECS = {
    "field-sweep": ("z", ["normalized_mse_empirical", "E_abs_analytic"], True),
    "similarity-sweep": ("sigma3", ["l1_mean_near_pair", "l1_mean_far_pair"], False),
    "window-sweep": ("window_size", ["mse", "singular_rate"], False),
    "loss-sweep": ("loss_rate", ["mse"], False),
    "mle-comparison": ("z", ["mse_approx", "mse_mle"], False),
    "analysis-tables": ("z", ["E_abs_closed", "E_abs_convolution"], False),
}


def write_plot_script(result: SweepResult, csv_path, script_path) -> None:
    """Emit a standalone matplotlib script that plots the written CSV."""
    x_col, y_cols, log_y = _PLOT_SPECS[result.name]
    text = f'''#!/usr/bin/env python3
"""Plot {result.name} results from {Path(csv_path).name}."""
import csv

import matplotlib.pyplot as plt

with open({str(csv_path)!r}) as fh:
    rows = list(csv.DictReader(fh))

x = [float(row[{x_col!r}]) for row in rows]
for col in {y_cols!r}:
    y = [float(row[col]) if row[col] else float("nan") for row in rows]
    plt.plot(x, y, marker="o", label=col)
plt.xlabel({x_col!r})
plt.ylabel("value")
{"plt.yscale('log')" if log_y else ""}
plt.legend()
plt.title({result.name!r})
plt.tight_layout()
plt.savefig({str(Path(csv_path).with_suffix(".png"))!r}, dpi=150)
print("wrote", {str(Path(csv_path).with_suffix(".png"))!r})
'''
    Path(script_path).write_text(text)
