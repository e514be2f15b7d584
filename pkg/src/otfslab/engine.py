"""Monte Carlo sweep orchestration.

Frames are simulated in fixed-size batches whose randomness is keyed by
(master seed, SNR point index, batch index) through counter-based Philox
streams, so results are bit-identical for a given configuration regardless
of worker count or scheduling.  Early stopping is evaluated on batch
boundaries; error counts merge by integer summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytic, kernels, modem
from .errors import ConfigError
from .fading import PathSpec, make_stream, sample_nakagami_gains
from .modem import Constellation, OtfsGrid

BATCH_FRAMES = 8192


@dataclass(frozen=True)
class SweepConfig:
    grid: OtfsGrid
    scheme: str = "bpsk"
    order: int = 2
    paths: tuple = (PathSpec(m=1, omega=1.0),)
    snr_db: tuple = tuple(float(s) for s in range(0, 21, 2))
    max_frames: int = 10_000_000
    target_bit_errors: int = 200
    master_seed: int = 1
    waveform: str = "otfs"              # "otfs" | "ofdm"
    mode: str = "siso-waveform"         # "siso-waveform" | "simo-semianalytic"
    interferers: tuple = ()             # per-user tuples of PathSpec (simo mode)
    workers: int = 1
    ofdm_chain: str = "cp"              # "cp" (conventional) | "shared" (CP-free)
    preset: str = "custom"

    def __post_init__(self):
        if list(self.snr_db) != sorted(set(self.snr_db)):
            raise ConfigError("snr points must be strictly increasing")
        if self.waveform not in ("otfs", "ofdm"):
            raise ConfigError(f"unknown waveform {self.waveform!r}")
        if self.mode not in ("siso-waveform", "simo-semianalytic"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.ofdm_chain not in ("cp", "shared"):
            raise ConfigError(f"unknown ofdm chain {self.ofdm_chain!r}")
        if self.max_frames < 1 or self.target_bit_errors < 0:
            raise ConfigError("frame and error budgets must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.paths:
            raise ConfigError("at least one desired path is required")


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    bit_errors: int
    bits: int
    ber: float
    ci_low: float
    ci_high: float
    analytic_ber: float
    # cluster-robust standard error of the BER estimate: bit errors within a
    # frame share one fade, so frame-level variance is the honest one
    se: float = 0.0

    @property
    def mc_valid(self) -> bool:
        return self.bits > 0


@dataclass(frozen=True)
class BerCurve:
    points: tuple
    waveform: str
    preset: str
    config: SweepConfig = field(repr=False, default=None)

    def point_at(self, snr_db: float) -> BerPoint:
        for p in self.points:
            if abs(p.snr_db - snr_db) < 1e-9:
                return p
        raise KeyError(f"no point at {snr_db} dB")


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0 or errors < 0 or errors > trials:
        raise ConfigError(f"need 0 <= errors <= trials with trials > 0, "
                          f"got ({errors}, {trials})")
    z = {0.90: 1.6448536269514722, 0.95: 1.959963984540054,
         0.99: 2.5758293035489004}.get(confidence)
    if z is None:
        raise ConfigError(f"unsupported confidence level {confidence}")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if errors == 0 else max(0.0, center - half)
    high = 1.0 if errors == trials else min(1.0, center + half)
    return low, high


# ---------------------------------------------------------------------------
# Per-preset precomputation
# ---------------------------------------------------------------------------

def _hamming_table(constellation: Constellation) -> np.ndarray:
    labels = constellation.bit_labels
    return (labels[:, None, :] != labels[None, :, :]).sum(axis=2).astype(np.int64)


def _otfs_path_ops(config: SweepConfig) -> np.ndarray:
    grid = config.grid
    mn = grid.frame_size
    U = modem.time_to_dd_operator(grid)
    V = modem.dd_to_time_operator(grid)
    ops = np.empty((len(config.paths), mn, mn), dtype=np.complex128)
    for p, spec in enumerate(config.paths):
        T = modem.cyclic_shift_matrix(mn, spec.l) @ modem.doppler_matrix(
            mn, spec.k + spec.kappa)
        ops[p] = U @ T @ V
    return ops


def _ofdm_shared_path_ops(config: SweepConfig) -> np.ndarray:
    grid = config.grid
    mn = grid.frame_size
    FM = modem._dft_unitary(grid.M)
    A = np.kron(np.eye(grid.N), FM)
    ops = np.empty((len(config.paths), mn, mn), dtype=np.complex128)
    for p, spec in enumerate(config.paths):
        T = modem.cyclic_shift_matrix(mn, spec.l) @ modem.doppler_matrix(
            mn, spec.k + spec.kappa)
        ops[p] = A @ T @ A.conj().T
    return ops


def _cp_ofdm_subcarrier_response(config: SweepConfig) -> tuple:
    """Per-path subcarrier response and the CP energy factor.

    The guard interval is sized for the grid's worst-case delay spread
    (M - 1 samples) regardless of the instantaneous channel, and the
    comparison holds total radiated frame energy fixed, so data symbols
    carry the fraction M / (M + L_cp) of the OTFS symbol energy.
    """
    grid = config.grid
    M, N = grid.M, grid.N
    l_cp = M - 1
    for spec in config.paths:
        if spec.l > l_cp:
            raise ConfigError(f"path delay {spec.l} exceeds the CP length {l_cp}")
    scale = math.sqrt(M / (M + l_cp)) if l_cp > 0 else 1.0
    phi = np.empty((len(config.paths), M * N), dtype=np.complex128)
    q = np.arange(M)
    for p, spec in enumerate(config.paths):
        sub = np.exp(-2j * np.pi * q * spec.l / M)
        for n in range(N):
            # quasi-static Doppler: one phase per OFDM symbol
            rot = np.exp(2j * np.pi * (spec.k + spec.kappa) * n / N)
            phi[p, n * M:(n + 1) * M] = rot * sub
    return phi, scale


def _analytic_reference(config: SweepConfig, es_n0: float,
                        mod: analytic.ModErrorParams) -> float:
    """Closed-form value attached to each sweep point."""
    if config.mode == "simo-semianalytic":
        mu, var = analytic.sinr_moments(es_n0, config.interferers)
        if var == 0.0:
            return analytic.deterministic_ber(es_n0, mod)
        return analytic.multiuser_ber(es_n0, analytic.gamma_approx(mu, var), mod)
    if config.waveform == "ofdm" and config.ofdm_chain == "cp":
        # matched-SNR reference: exact for single-path presets
        l_cp = config.grid.M - 1
        es_n0 = es_n0 * config.grid.M / (config.grid.M + l_cp)
    return analytic.siso_ber(es_n0, config.paths, mod)


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

def run_sweep(config: SweepConfig, progress=None) -> BerCurve:
    """Run the configured sweep and return the per-SNR curve.

    For waveform modes every frame draws a fresh channel and noise
    realization; detection is exhaustive ML; bit errors use Gray-mapped
    labels.  Points stop at target_bit_errors or max_frames, whichever
    comes first (checked on batch boundaries).
    """
    if config.mode == "simo-semianalytic":
        return _run_semianalytic(config, progress)
    return _run_waveform(config, progress)


def _run_waveform(config: SweepConfig, progress=None) -> BerCurve:
    grid = config.grid
    mn = grid.frame_size
    constellation = modem.make_constellation(config.scheme, config.order)
    mod = analytic.mod_params(config.scheme, config.order)
    bps = constellation.bits_per_symbol
    hamming = _hamming_table(constellation)
    points_arr = np.ascontiguousarray(constellation.points)
    kernels.set_threads(config.workers)

    diag_chain = config.waveform == "ofdm" and config.ofdm_chain == "cp"
    if diag_chain:
        phi, scale = _cp_ofdm_subcarrier_response(config)
    else:
        ops = _otfs_path_ops(config) if config.waveform == "otfs" \
            else _ofdm_shared_path_ops(config)
        cand_idx, cand_pts = modem.enumerate_candidates(constellation, mn)
        cand_idx = np.ascontiguousarray(cand_idx)
        cand_pts = np.ascontiguousarray(cand_pts)

    specs = config.paths
    out = []
    for pt_idx, snr_db in enumerate(config.snr_db):
        es_n0 = 10.0 ** (snr_db / 10.0)
        sigma = math.sqrt(1.0 / es_n0)
        errors = 0
        frames = 0
        batch_idx = 0
        while frames < config.max_frames and errors < config.target_bit_errors:
            nf = min(BATCH_FRAMES, config.max_frames - frames)
            rng = make_stream(config.master_seed, pt_idx, batch_idx)
            gains = sample_nakagami_gains(specs, rng, nf)
            sym_idx = rng.integers(0, constellation.order, (nf, mn))
            noise = (rng.standard_normal((nf, mn))
                     + 1j * rng.standard_normal((nf, mn))) * (sigma / math.sqrt(2.0))
            if diag_chain:
                errors += kernels.diag_frame_errors(
                    phi, scale, gains, sym_idx, noise, points_arr, hamming)
            else:
                errors += kernels.matrix_frame_errors(
                    ops, gains, sym_idx, noise, points_arr, cand_idx,
                    cand_pts, hamming)
            frames += nf
            batch_idx += 1
            if progress is not None:
                progress(pt_idx, snr_db, frames, errors)
        bits = frames * mn * bps
        ber = errors / bits
        lo, hi = wilson_interval(errors, bits)
        out.append(BerPoint(snr_db=float(snr_db), bit_errors=errors, bits=bits,
                            ber=ber, ci_low=lo, ci_high=hi,
                            analytic_ber=_analytic_reference(config, es_n0, mod)))
    return BerCurve(points=tuple(out), waveform=config.waveform,
                    preset=config.preset, config=config)


def _run_semianalytic(config: SweepConfig, progress=None) -> BerCurve:
    mod = analytic.mod_params(config.scheme, config.order)
    trials = max(config.max_frames, 10_000)
    out = []
    for pt_idx, snr_db in enumerate(config.snr_db):
        es_n0 = 10.0 ** (snr_db / 10.0)
        rng = make_stream(config.master_seed, pt_idx)
        ber, se = analytic.semi_analytic_mc_ber(
            es_n0, config.paths, config.interferers, mod, rng, trials)
        lo = max(0.0, ber - 1.959963984540054 * se)
        hi = min(1.0, ber + 1.959963984540054 * se)
        out.append(BerPoint(snr_db=float(snr_db), bit_errors=0, bits=0,
                            ber=ber, ci_low=lo, ci_high=hi,
                            analytic_ber=_analytic_reference(config, es_n0, mod)))
        if progress is not None:
            progress(pt_idx, snr_db, trials, 0)
    return BerCurve(points=tuple(out), waveform=config.waveform,
                    preset=config.preset, config=config)


def paired_comparison(config: SweepConfig, progress=None) -> tuple:
    """OTFS and OFDM sweeps consuming identical channel/noise realizations."""
    otfs = run_sweep(replace(config, waveform="otfs"), progress)
    ofdm = run_sweep(replace(config, waveform="ofdm"), progress)
    return otfs, ofdm
