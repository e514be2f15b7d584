"""Hot Monte Carlo kernels: frame-level ML detection and bit-error counting.

Two interchangeable backends compute bit-identical results:

* ``numba``  -- JIT-compiled per-frame loops, parallel across frames.
* ``numpy``  -- vectorized fallback with the same accumulation order.

Selection: the ``OTFSLAB_BACKEND`` environment variable (``numba`` or
``numpy``), defaulting to numba when importable.  Both paths accumulate
distances in ascending index order so that argmin tie-breaking and floating
point results agree exactly; error counts are integer sums, so parallel
scheduling cannot change them.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit, prange
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f
        return deco if not (args and callable(args[0])) else args[0]

    prange = range


_env = os.environ.get("OTFSLAB_BACKEND", "").strip().lower()
if _env in ("numba", "numpy"):
    _BACKEND = _env
    if _BACKEND == "numba" and not _HAVE_NUMBA:
        raise ImportError("OTFSLAB_BACKEND=numba but numba is not installed")
else:
    _BACKEND = "numba" if _HAVE_NUMBA else "numpy"


def active_backend() -> str:
    return _BACKEND


def set_backend(name: str) -> None:
    """Override the backend (tests and benchmarks)."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _HAVE_NUMBA:
        raise ValueError("numba backend requested but numba is not installed")
    _BACKEND = name


def set_threads(workers: int) -> None:
    """Bound the numba thread pool; a no-op for the numpy backend."""
    if _HAVE_NUMBA and workers >= 1:
        numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# Matrix-channel frames (OTFS, and the shared-H OFDM reference): the frame's
# effective channel is sum_p h_p * A_p with A_p fixed per preset.
# ---------------------------------------------------------------------------

def _matrix_frames_numpy(A_ops, gains, sym_idx, noise, points, cand_idx,
                         cand_pts, hamming):
    F, MN = sym_idx.shape
    # explicit ascending-p accumulation keeps float parity with the jit path
    Heff = np.zeros((F, MN, MN), dtype=np.complex128)
    for p in range(A_ops.shape[0]):
        Heff += gains[:, p, None, None] * A_ops[p]
    x = points[sym_idx]
    y = (Heff * x[:, None, :]).sum(axis=2) + noise
    prop = (cand_pts[None, :, None, :] * Heff[:, None, :, :]).sum(axis=3)
    diff = y[:, None, :] - prop
    dist = (diff.real ** 2 + diff.imag ** 2).sum(axis=2)
    best = np.argmin(dist, axis=1)
    det_idx = cand_idx[best]
    per_frame = hamming[det_idx, sym_idx].sum(axis=1)
    return int(per_frame.sum()), int((per_frame ** 2).sum())


@njit(cache=True, parallel=True)
def _matrix_frames_numba(A_ops, gains, sym_idx, noise, points, cand_idx,
                         cand_pts, hamming):  # pragma: no cover - jitted
    F, MN = sym_idx.shape
    P = A_ops.shape[0]
    C = cand_pts.shape[0]
    total = 0
    total_sq = 0
    for f in prange(F):
        Heff = np.zeros((MN, MN), dtype=np.complex128)
        for p in range(P):
            h = gains[f, p]
            for i in range(MN):
                for j in range(MN):
                    Heff[i, j] += h * A_ops[p, i, j]
        y = np.empty(MN, dtype=np.complex128)
        for i in range(MN):
            acc = 0.0 + 0.0j
            for j in range(MN):
                acc += Heff[i, j] * points[sym_idx[f, j]]
            y[i] = acc + noise[f, i]
        best = 0
        best_d = np.inf
        for c in range(C):
            d = 0.0
            for i in range(MN):
                acc = 0.0 + 0.0j
                for j in range(MN):
                    acc += cand_pts[c, j] * Heff[i, j]
                diff = y[i] - acc
                d += diff.real * diff.real + diff.imag * diff.imag
            if d < best_d:
                best_d = d
                best = c
        errs = 0
        for i in range(MN):
            errs += hamming[cand_idx[best, i], sym_idx[f, i]]
        total += errs
        total_sq += errs * errs
    return total, total_sq


def matrix_frame_errors(A_ops, gains, sym_idx, noise, points, cand_idx,
                        cand_pts, hamming) -> tuple:
    """(bit errors, sum of squared per-frame errors) over a batch of frames."""
    args = (np.ascontiguousarray(A_ops), np.ascontiguousarray(gains),
            np.ascontiguousarray(sym_idx), np.ascontiguousarray(noise),
            np.ascontiguousarray(points), np.ascontiguousarray(cand_idx),
            np.ascontiguousarray(cand_pts), np.ascontiguousarray(hamming))
    if _BACKEND == "numba":
        s, sq = _matrix_frames_numba(*args)
        return int(s), int(sq)
    return _matrix_frames_numpy(*args)


# ---------------------------------------------------------------------------
# Subcarrier-diagonal frames (conventional CP-OFDM): each subcarrier sees a
# flat gain lambda_q = sum_p h_p phi[p, q]; per-block ML factorizes into
# per-subcarrier nearest-point decisions because the block channel is
# diagonal after the FFT.
# ---------------------------------------------------------------------------

def _diag_frames_numpy(phi, scale, gains, sym_idx, noise, points, hamming):
    lam = np.zeros((gains.shape[0], phi.shape[1]), dtype=np.complex128)
    for p in range(phi.shape[0]):
        lam += gains[:, p, None] * phi[p]
    y = scale * lam * points[sym_idx] + noise
    ref = scale * lam[:, :, None] * points[None, None, :]
    diff = y[:, :, None] - ref
    dist = diff.real ** 2 + diff.imag ** 2
    det = np.argmin(dist, axis=2)
    per_frame = hamming[det, sym_idx].sum(axis=1)
    return int(per_frame.sum()), int((per_frame ** 2).sum())


@njit(cache=True, parallel=True)
def _diag_frames_numba(phi, scale, gains, sym_idx, noise, points,
                       hamming):  # pragma: no cover - jitted
    F, MN = sym_idx.shape
    P = phi.shape[0]
    order = points.shape[0]
    total = 0
    total_sq = 0
    for f in prange(F):
        errs = 0
        for q in range(MN):
            lam = 0.0 + 0.0j
            for p in range(P):
                lam += gains[f, p] * phi[p, q]
            y = scale * lam * points[sym_idx[f, q]] + noise[f, q]
            best = 0
            best_d = np.inf
            for a in range(order):
                diff = y - scale * lam * points[a]
                d = diff.real * diff.real + diff.imag * diff.imag
                if d < best_d:
                    best_d = d
                    best = a
            errs += hamming[best, sym_idx[f, q]]
        total += errs
        total_sq += errs * errs
    return total, total_sq


def diag_frame_errors(phi, scale, gains, sym_idx, noise, points, hamming) -> tuple:
    """(bit errors, sum of squared per-frame errors) for diagonal frames."""
    args = (np.ascontiguousarray(phi), float(scale), np.ascontiguousarray(gains),
            np.ascontiguousarray(sym_idx), np.ascontiguousarray(noise),
            np.ascontiguousarray(points), np.ascontiguousarray(hamming))
    if _BACKEND == "numba":
        s, sq = _diag_frames_numba(*args)
        return int(s), int(sq)
    return _diag_frames_numpy(*args)
