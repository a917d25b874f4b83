"""Validation metrics for synthesized channels.

Covers link-level summaries (entropy capacity without water-filling, Demmel
condition number, per-element gain, Rician K-factor, RMS delay spread),
spatial-consistency diagnostics (inter-element correlation, sliding-window
angle estimation, path extraction and tracking in the delay domain), and a
two-sample Cramer-von Mises distance for comparing metric distributions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .errors import NumericError
from .channel import FrequencyGrid


def _singular_values(values: np.ndarray) -> np.ndarray:
    """Batched singular values over the frequency axis, shape (K, min(N, M))."""
    values = np.asarray(values)
    if values.ndim != 3:
        raise ValueError(
            f"values must have shape (users, elements, frequencies), "
            f"got {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    return np.linalg.svd(np.moveaxis(values, 2, 0), compute_uv=False)


def entropy_capacity(values, snr_db: float = 15.0) -> float:
    """Frequency-averaged open-loop MIMO capacity in bits/s/Hz.

    Equal power over the M transmit elements, channel normalized by the
    mean entry power:

    ``mean_k sum_i log2(1 + snr * sigma_ik**2 / (M * eta))``

    with ``eta = mean(|H|**2)`` over all entries and ``sigma_ik`` the
    singular values of the (users x elements) matrix at frequency k.

    Parameters
    ----------
    values : ndarray, shape (N, M, K)
    snr_db : float
        Signal-to-noise ratio in dB.
    """
    values = np.asarray(values)
    sigma = _singular_values(values)
    eta = float(np.mean(np.abs(values) ** 2))
    if eta <= 0.0:
        raise NumericError("all-zero channel has no capacity normalization")
    snr = 10.0 ** (float(snr_db) / 10.0)
    m = values.shape[1]
    per_freq = np.sum(np.log2(1.0 + snr / (m * eta) * sigma**2), axis=1)
    return float(np.mean(per_freq))


def _rank_deficient(sigma: np.ndarray, shape) -> np.ndarray:
    """Per-frequency numerical rank deficiency from singular values (K,)."""
    tol = sigma[:, 0] * max(shape[0], shape[1]) * np.finfo(float).eps
    return sigma[:, -1] <= tol


def demmel_condition(values) -> float:
    """Frequency-averaged Demmel condition number (linear).

    ``mean_k ||H(f_k)||_F / sigma_min(f_k)``.  Frequencies whose matrix is
    numerically rank deficient make the average infinite; that is returned
    as ``inf`` with a warning.
    """
    values = np.asarray(values)
    sigma = _singular_values(values)
    fro = np.sqrt(np.sum(sigma**2, axis=1))
    smin = sigma[:, -1]
    if np.any(_rank_deficient(sigma, values.shape[:2])):
        warnings.warn("rank-deficient channel matrix: infinite condition number")
        return float("inf")
    return float(np.mean(fro / smin))


def multiuser_trials(
    pool,
    num_ues: int,
    num_trials: int,
    rng: np.random.Generator,
    snr_db: float = 15.0,
):
    """Capacity and Demmel samples over random user subsets.

    Each trial draws ``num_ues`` users uniformly without replacement from
    the pool of per-user channels and evaluates both metrics on the stacked
    matrix.

    Parameters
    ----------
    pool : ndarray, shape (P, M, K)
        Per-user channel responses.
    num_ues : int
        Users per trial, 1 <= num_ues <= P.
    num_trials : int
    rng : numpy.random.Generator

    Returns
    -------
    (capacity, demmel) : tuple of ndarray, each shape (num_trials,)
    """
    pool = np.asarray(pool)
    if pool.ndim != 3:
        raise ValueError(f"pool must have shape (P, M, K), got {pool.shape}")
    num_ues = int(num_ues)
    num_trials = int(num_trials)
    if not 1 <= num_ues <= pool.shape[0]:
        raise ValueError(
            f"num_ues must be in [1, {pool.shape[0]}], got {num_ues}"
        )
    if num_trials < 1:
        raise ValueError(f"num_trials must be >= 1, got {num_trials}")
    capacity = np.empty(num_trials)
    demmel = np.empty(num_trials)
    snr = 10.0 ** (float(snr_db) / 10.0)
    m = pool.shape[1]
    for t in range(num_trials):
        subset = pool[rng.choice(pool.shape[0], size=num_ues, replace=False)]
        sigma = _singular_values(subset)
        eta = float(np.mean(np.abs(subset) ** 2))
        if eta <= 0.0:
            raise NumericError("all-zero channel in trial subset")
        capacity[t] = float(
            np.mean(np.sum(np.log2(1.0 + snr / (m * eta) * sigma**2), axis=1))
        )
        smin = sigma[:, -1]
        if np.any(_rank_deficient(sigma, subset.shape[:2])):
            demmel[t] = float("inf")
        else:
            demmel[t] = float(np.mean(np.sqrt(np.sum(sigma**2, axis=1)) / smin))
    return capacity, demmel


def sns_amplitude_matrix(aaf, amplitudes) -> np.ndarray:
    """Per-element path amplitude magnitudes, shape (M, L).

    Attenuation factors scaled by the reference path amplitudes (the
    magnitude of the reference response is frequency independent).
    """
    aaf = np.asarray(aaf, dtype=float)
    amplitudes = np.asarray(amplitudes, dtype=float)
    if aaf.ndim != 2 or amplitudes.shape != (aaf.shape[1],):
        raise ValueError(
            f"aaf must be (M, L) with amplitudes of shape (L,), got "
            f"{aaf.shape} and {amplitudes.shape}"
        )
    return aaf * amplitudes[None, :]


def avg_spatial_correlation(matrix, delta: int) -> float:
    """Mean Pearson correlation between element rows ``delta`` apart.

    Rows of ``matrix`` (shape (M, L)) are per-element path amplitude
    vectors; the correlation is computed across the L paths for every pair
    (i, i + delta) and averaged.  Zero-variance rows are skipped with a
    warning.

    Raises
    ------
    NumericError
        If no element pair has two variable rows.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] < 2:
        raise ValueError(
            f"matrix must be (M, L) with L >= 2, got {matrix.shape}"
        )
    delta = int(delta)
    if not 0 <= delta < matrix.shape[0]:
        raise ValueError(
            f"delta must be in [0, {matrix.shape[0]}), got {delta}"
        )
    x = matrix[: matrix.shape[0] - delta]
    y = matrix[delta:]
    xc = x - x.mean(axis=1, keepdims=True)
    yc = y - y.mean(axis=1, keepdims=True)
    den = np.sqrt(np.sum(xc**2, axis=1) * np.sum(yc**2, axis=1))
    valid = den > 0.0
    if np.any(~valid):
        warnings.warn(
            f"skipping {int(np.sum(~valid))} constant-row pairs in "
            f"spatial correlation"
        )
    if not np.any(valid):
        raise NumericError("no element pair with variable amplitude rows")
    num = np.sum(xc * yc, axis=1)
    return float(np.mean(num[valid] / den[valid]))


def channel_gain_db(values) -> np.ndarray:
    """Frequency-averaged power gain in dB along the last axis."""
    values = np.asarray(values)
    power = np.mean(np.abs(values) ** 2, axis=-1)
    if np.any(power == 0.0):
        warnings.warn("zero-power entries give -inf gain")
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power)


def path_gain_db(amplitudes) -> np.ndarray:
    """Per-element total path power in dB, summed over the last axis."""
    amplitudes = np.asarray(amplitudes, dtype=float)
    power = np.sum(amplitudes**2, axis=-1)
    if np.any(power == 0.0):
        warnings.warn("zero-power entries give -inf gain")
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power)


def rician_k_db(amplitudes) -> np.ndarray:
    """Per-element Rician K-factor in dB from path amplitudes (..., L).

    Ratio of the strongest path's power to the summed power of the others.
    A single path (or all-zero remainder) gives ``inf`` with a warning.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    if amplitudes.ndim < 1 or amplitudes.shape[-1] < 1:
        raise ValueError("amplitudes must have at least one path")
    if np.any(amplitudes < 0.0) or not np.all(np.isfinite(amplitudes)):
        raise ValueError("amplitudes must be finite and >= 0")
    power = amplitudes**2
    total = np.sum(power, axis=-1)
    if np.any(total <= 0.0):
        raise ValueError("each element needs a positive total power")
    strongest = np.max(power, axis=-1)
    rest = total - strongest
    if np.any(rest == 0.0):
        warnings.warn("dominant-path-only elements give infinite K-factor")
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(strongest / rest)


def rms_delay_spread(powers, delays, dynamic_range_db: float = 40.0) -> np.ndarray:
    """Power-weighted RMS delay spread in seconds.

    Paths more than ``dynamic_range_db`` (power dB) below the per-element
    peak are excluded before computing the power-weighted delay standard
    deviation.

    Parameters
    ----------
    powers : ndarray, shape (..., L)
        Non-negative path powers.
    delays : ndarray
        Path delays in seconds, broadcastable to ``powers``.
    dynamic_range_db : float
        Inclusion window below the peak, > 0.
    """
    powers = np.asarray(powers, dtype=float)
    delays = np.broadcast_to(np.asarray(delays, dtype=float), powers.shape)
    if np.any(powers < 0.0) or not np.all(np.isfinite(powers)):
        raise ValueError("powers must be finite and >= 0")
    if float(dynamic_range_db) <= 0.0:
        raise ValueError(f"dynamic_range_db must be > 0, got {dynamic_range_db}")
    peak = np.max(powers, axis=-1, keepdims=True)
    if np.any(peak <= 0.0):
        raise ValueError("each element needs a positive peak power")
    cut = peak * 10.0 ** (-float(dynamic_range_db) / 10.0)
    kept = np.where(powers >= cut, powers, 0.0)
    norm = np.sum(kept, axis=-1)
    mean = np.sum(kept * delays, axis=-1) / norm
    var = np.sum(kept * (delays - mean[..., None]) ** 2, axis=-1) / norm
    return np.sqrt(var)


def cvm_distance(a, b) -> float:
    """Two-sample Cramer-von Mises statistic.

    ``(n*m/(n+m)**2) * sum((F_a(x) - F_b(x))**2)`` with the sum over the
    pooled sample and F the empirical CDFs.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("samples must be finite")
    pooled = np.concatenate([a, b])
    f_a = np.searchsorted(a, pooled, side="right") / a.size
    f_b = np.searchsorted(b, pooled, side="right") / b.size
    scale = a.size * b.size / (a.size + b.size) ** 2
    return float(scale * np.sum((f_a - f_b) ** 2))


@dataclass
class EmpiricalCDF:
    """Empirical distribution function of a sample."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        self.samples = np.sort(s)

    def __call__(self, x):
        """Fraction of samples <= x."""
        return np.searchsorted(self.samples, x, side="right") / self.samples.size


@dataclass
class PowerDelayProfile:
    """Per-element power over a shared delay grid."""

    delays: np.ndarray  # seconds, (T,)
    powers: np.ndarray  # linear power, (M, T)

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=float)
        self.powers = np.asarray(self.powers, dtype=float)
        if self.delays.ndim != 1 or self.powers.ndim != 2:
            raise ValueError("delays must be (T,), powers (M, T)")
        if self.powers.shape[1] != self.delays.size:
            raise ValueError(
                f"powers delay axis {self.powers.shape[1]} != delays "
                f"{self.delays.size}"
            )
        if np.any(self.powers < 0.0):
            raise ValueError("powers must be >= 0")

    @classmethod
    def from_cir(cls, cir, delays) -> "PowerDelayProfile":
        return cls(delays=delays, powers=np.abs(np.asarray(cir)) ** 2)


def impulse_response(values, grid: FrequencyGrid):
    """Delay-domain response via inverse DFT along the frequency axis.

    Returns ``(cir, delays)`` where ``cir`` matches the input shape and the
    delay grid spans ``[0, 1/df)`` with resolution ``1/(K*df)``; responses
    with delays beyond ``1/df`` alias.
    """
    values = np.asarray(values)
    k = values.shape[-1]
    if k < 2 or grid.num_points != k:
        raise ValueError("need at least two grid-matched frequency points")
    df = grid.bandwidth_hz / (k - 1)
    cir = np.fft.ifft(values, axis=-1)
    delays = np.arange(k) / (k * df)
    return cir, delays


@dataclass
class PathTrack:
    """One path followed across array elements in the delay domain."""

    elements: np.ndarray  # element indices, (n,)
    delays: np.ndarray  # seconds, (n,)
    amplitudes: np.ndarray  # linear, (n,)

    @property
    def span(self) -> int:
        return self.elements.size


def _delay_peaks(mag, height):
    """Local maxima above ``height``, including the boundary bins."""
    idx = list(scipy.signal.find_peaks(mag, height=height)[0])
    if mag.size >= 2:
        if mag[0] >= height and mag[0] > mag[1]:
            idx.insert(0, 0)
        if mag[-1] >= height and mag[-1] > mag[-2]:
            idx.append(mag.size - 1)
    return np.array(idx, dtype=int)


def extract_and_track(
    cir,
    delays,
    threshold_db: float = 40.0,
    delay_gate: float = None,
    min_span: int = 5,
    max_gap: int = 2,
):
    """Extract delay-domain peaks per element and associate them into tracks.

    Per element, local maxima of ``|cir|`` within ``threshold_db`` (power)
    of that element's strongest bin become candidates.  Candidates join the
    active track with the nearest last delay when within ``delay_gate``
    seconds, otherwise they start new tracks; tracks missing for more than
    ``max_gap`` consecutive elements are closed, and tracks spanning fewer
    than ``min_span`` elements are dropped.

    Parameters
    ----------
    cir : ndarray, shape (M, T)
        Per-element delay-domain response.
    delays : ndarray, shape (T,)
        Delay grid in seconds, increasing.
    threshold_db : float
        Peak acceptance window below the per-element maximum, power dB.
    delay_gate : float, optional
        Association gate in seconds; defaults to two delay bins.
    min_span : int
        Minimum elements per returned track.
    max_gap : int
        Elements a track may miss before closing.

    Returns
    -------
    list of PathTrack
        Sorted by first element, then mean delay.
    """
    cir = np.asarray(cir)
    delays = np.asarray(delays, dtype=float)
    if cir.ndim != 2 or delays.shape != (cir.shape[1],):
        raise ValueError("cir must be (M, T) with delays of shape (T,)")
    if delays.size < 2 or np.any(np.diff(delays) <= 0):
        raise ValueError("delays must be increasing with at least two bins")
    if delay_gate is None:
        delay_gate = 2.0 * (delays[1] - delays[0])
    delay_gate = float(delay_gate)
    if delay_gate <= 0.0:
        raise ValueError(f"delay_gate must be > 0, got {delay_gate}")

    active = []
    done = []
    height_ratio = 10.0 ** (-float(threshold_db) / 20.0)
    for m in range(cir.shape[0]):
        mag = np.abs(cir[m])
        peak = mag.max()
        cands = (
            _delay_peaks(mag, peak * height_ratio) if peak > 0.0 else np.array([], int)
        )
        cand_delay = delays[cands]
        cand_amp = mag[cands]
        unmatched = set(range(cands.size))
        for track in active:
            best = None
            best_gap = delay_gate
            for j in unmatched:
                gap = abs(cand_delay[j] - track["last_delay"])
                if gap <= best_gap:
                    best, best_gap = j, gap
            if best is None:
                track["misses"] += 1
            else:
                unmatched.discard(best)
                track["elements"].append(m)
                track["delays"].append(float(cand_delay[best]))
                track["amplitudes"].append(float(cand_amp[best]))
                track["last_delay"] = float(cand_delay[best])
                track["misses"] = 0
        for j in sorted(unmatched):
            active.append(
                {
                    "elements": [m],
                    "delays": [float(cand_delay[j])],
                    "amplitudes": [float(cand_amp[j])],
                    "last_delay": float(cand_delay[j]),
                    "misses": 0,
                }
            )
        still_active = []
        for track in active:
            (done if track["misses"] > max_gap else still_active).append(track)
        active = still_active
    done.extend(active)

    tracks = [
        PathTrack(
            elements=np.array(t["elements"], dtype=int),
            delays=np.array(t["delays"]),
            amplitudes=np.array(t["amplitudes"]),
        )
        for t in done
        if len(t["elements"]) >= int(min_span)
    ]
    tracks.sort(key=lambda t: (t.elements[0], float(np.mean(t.delays))))
    return tracks


def sliding_window_angles(
    h,
    spacing: float,
    wavelength: float,
    window: int = 51,
    grid_size: int = 721,
):
    """Dominant arrival/departure angle per sliding element window.

    Correlates each length-``window`` segment of a single-frequency element
    response against plane-wave signatures on a uniform grid of direction
    cosines in [-1, 1] and picks the strongest.

    Parameters
    ----------
    h : ndarray, shape (M,)
        Complex element response at one frequency.
    spacing : float
        Element spacing in metres.
    wavelength : float
        Carrier wavelength in metres.
    window : int
        Elements per window, 2 <= window <= M.
    grid_size : int
        Direction-cosine grid resolution.

    Returns
    -------
    (centers, angles) : tuple of ndarray
        Center element index and broadside angle (radians, ``arcsin`` of
        the direction cosine) per window position.
    """
    h = np.asarray(h)
    if h.ndim != 1:
        raise ValueError(f"h must be 1-D, got shape {h.shape}")
    window = int(window)
    if not 2 <= window <= h.size:
        raise ValueError(f"window must be in [2, {h.size}], got {window}")
    if spacing <= 0.0 or wavelength <= 0.0:
        raise ValueError("spacing and wavelength must be > 0")
    grid_size = int(grid_size)
    if grid_size < 3:
        raise ValueError(f"grid_size must be >= 3, got {grid_size}")
    u = np.linspace(-1.0, 1.0, grid_size)
    steer = np.exp(
        -2j * np.pi * spacing / wavelength * np.outer(np.arange(window), u)
    )
    segments = np.lib.stride_tricks.sliding_window_view(h, window)
    spectrum = np.abs(segments @ steer)
    best = u[np.argmax(spectrum, axis=1)]
    centers = np.arange(segments.shape[0]) + window // 2
    return centers, np.arcsin(best)
