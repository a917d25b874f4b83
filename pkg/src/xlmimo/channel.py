"""Wideband channel assembly.

The frequency response at element m is the sum over paths of three factors:
the reference-element path response ``alpha_l * exp(-2j*pi*f*tau_l)``, the
per-element propagation weight from the wavefront expansion, and the
per-element amplitude attenuation factor.  Channels for several users share
the array and frequency grid and stack into a (users, elements,
frequencies) tensor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .geometry import ArrayGeometry, SPEED_OF_LIGHT, direction_vector
from .nearfield import (
    AntennaPattern,
    PathRecord,
    Stationarity,
    WavefrontModel,
    build_a_tensor,
    expand_path,
)
from .sns import AAFStatParams, build_aaf_matrix

#: Supported synthesis variants: wavefront axis (nf = per-path spherical
#: models, ff = plane waves) crossed with the stationarity axis (sns =
#: generated attenuation factors, ss = none), plus the classical abrupt
#: baseline (vr = plane waves with binary on/off visibility intervals).
VARIANTS = ("nf-sns", "nf-ss", "ff-sns", "ff-ss", "vr")


@dataclass
class FrequencyGrid:
    """Uniform frequency sampling of the band of interest."""

    f_low_hz: float
    f_high_hz: float
    num_points: int

    def __post_init__(self):
        self.f_low_hz = float(self.f_low_hz)
        self.f_high_hz = float(self.f_high_hz)
        self.num_points = int(self.num_points)
        if not 0.0 < self.f_low_hz <= self.f_high_hz:
            raise ValueError(
                f"need 0 < f_low_hz <= f_high_hz, got "
                f"({self.f_low_hz}, {self.f_high_hz})"
            )
        if self.num_points < 1:
            raise ValueError(f"num_points must be >= 1, got {self.num_points}")

    @property
    def carrier_hz(self) -> float:
        """Band-center frequency."""
        return 0.5 * (self.f_low_hz + self.f_high_hz)

    @property
    def bandwidth_hz(self) -> float:
        return self.f_high_hz - self.f_low_hz

    def points(self) -> np.ndarray:
        """The K sampled frequencies in Hz."""
        return np.linspace(self.f_low_hz, self.f_high_hz, self.num_points)


@dataclass
class ChannelTensor:
    """Synthesized frequency responses, shape (users, elements, frequencies)."""

    values: np.ndarray
    grid: FrequencyGrid
    variant: str = "nf-sns"
    seed: int | None = None
    geometry: ArrayGeometry | None = None
    config_sha256: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 3:
            raise ValueError(
                f"values must have shape (users, elements, frequencies), "
                f"got {self.values.shape}"
            )
        if not np.iscomplexobj(self.values):
            self.values = self.values.astype(complex)
        if self.values.shape[2] != self.grid.num_points:
            raise ValueError(
                f"frequency axis {self.values.shape[2]} does not match "
                f"grid num_points {self.grid.num_points}"
            )
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def num_users(self) -> int:
        return self.values.shape[0]

    @property
    def num_elements(self) -> int:
        return self.values.shape[1]


def reference_response(paths, frequencies) -> np.ndarray:
    """Reference-element path responses, shape (L, K).

    Entry (l, k) is ``amplitude_l * exp(-2j*pi*f_k*delay_l)``; the reference
    phase is carried by the per-element weights instead.
    """
    paths = list(paths)
    if not paths:
        raise ValueError("paths must be non-empty")
    frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
    amplitudes = np.array([p.amplitude for p in paths])
    delays = np.array([p.delay for p in paths])
    return amplitudes[:, None] * np.exp(
        -2j * np.pi * np.outer(delays, frequencies)
    )


def vr_aaf(num_elements: int, interval) -> np.ndarray:
    """Binary visibility-interval attenuation factors.

    Elements inside ``interval = (start, stop)`` (half-open, 0-based) get 1,
    the rest 0.
    """
    num_elements = int(num_elements)
    start, stop = int(interval[0]), int(interval[1])
    if not 0 <= start < stop <= num_elements:
        raise ValueError(
            f"interval must satisfy 0 <= start < stop <= {num_elements}, "
            f"got ({start}, {stop})"
        )
    out = np.zeros(num_elements)
    out[start:stop] = 1.0
    return out


def random_visibility_interval(
    num_elements: int,
    rng: np.random.Generator,
    min_fraction: float = 0.3,
    max_fraction: float = 0.8,
) -> tuple:
    """Draw a random visibility interval covering a fraction of the array."""
    if not 0.0 < min_fraction <= max_fraction <= 1.0:
        raise ValueError("need 0 < min_fraction <= max_fraction <= 1")
    length = max(1, int(round(rng.uniform(min_fraction, max_fraction) * num_elements)))
    start = int(rng.integers(0, num_elements - length + 1))
    return start, start + length


def build_variant_aaf(
    paths,
    num_elements: int,
    variant: str,
    params: AAFStatParams = None,
    seed: int = None,
    stream_key: tuple = (),
) -> np.ndarray:
    """Attenuation-factor matrix (M, L) for a synthesis variant.

    ``*-ss`` variants return ones; ``*-sns`` variants generate correlated
    factors per non-stationary path; ``vr`` replaces generation with binary
    visibility intervals per non-stationary path.  Fixed per-path ``aaf``
    overrides are honored in all variants except ``*-ss``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    paths = list(paths)
    if variant.endswith("-ss"):
        return np.ones((int(num_elements), len(paths)))
    if variant == "vr":
        out = np.ones((int(num_elements), len(paths)))
        for l, path in enumerate(paths):
            if path.aaf is not None:
                if path.aaf.size != int(num_elements):
                    raise ValueError(
                        f"path {l}: fixed aaf length {path.aaf.size} != "
                        f"num_elements {num_elements}"
                    )
                out[:, l] = path.aaf
            elif path.stationarity is Stationarity.NON_STATIONARY:
                if seed is None:
                    raise ValueError(
                        "seed is required for visibility-interval generation"
                    )
                rng = np.random.default_rng(
                    np.random.SeedSequence(seed, spawn_key=(*stream_key, l))
                )
                out[:, l] = vr_aaf(
                    num_elements, random_visibility_interval(int(num_elements), rng)
                )
        return out
    return build_aaf_matrix(
        paths, num_elements, params=params, seed=seed, stream_key=stream_key
    )


def assemble(
    paths,
    geometry: ArrayGeometry,
    tx_pattern: AntennaPattern,
    rx_pattern: AntennaPattern,
    grid: FrequencyGrid,
    aaf: np.ndarray = None,
    variant: str = "nf-sns",
    seed: int = None,
) -> ChannelTensor:
    """Synthesize one user's channel, shape (1, M, K).

    Parameters
    ----------
    paths : sequence of PathRecord
    geometry : ArrayGeometry
    tx_pattern, rx_pattern : AntennaPattern
    grid : FrequencyGrid
    aaf : ndarray (M, L), optional
        Attenuation factors; built per ``variant`` when omitted.
    variant : str
        One of ``VARIANTS``; ``ff-*``/``vr`` force plane-wave weights.
    seed : int, optional
        Root seed for attenuation-factor generation (recorded in the
        output either way).
    """
    paths = list(paths)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    frequencies = grid.points()
    force_ff = variant.startswith("ff-") or variant == "vr"
    a = build_a_tensor(
        paths,
        geometry,
        tx_pattern,
        rx_pattern,
        frequencies,
        carrier_hz=grid.carrier_hz,
        force_ff=force_ff,
    )
    if aaf is None:
        aaf = build_variant_aaf(paths, geometry.num_elements, variant, seed=seed)
    else:
        aaf = np.asarray(aaf, dtype=float)
    if aaf.shape != (geometry.num_elements, len(paths)):
        raise ValueError(
            f"aaf shape {aaf.shape} != {(geometry.num_elements, len(paths))}"
        )
    if np.any(aaf < 0.0) or not np.all(np.isfinite(aaf)):
        raise ValueError("aaf entries must be finite and >= 0")
    h_ref = reference_response(paths, frequencies)
    values = np.einsum("mlk,ml,lk->mk", a, aaf, h_ref)
    return ChannelTensor(
        values=values[None, :, :],
        grid=grid,
        variant=variant,
        seed=seed,
        geometry=geometry,
    )


def multi_user(tensors) -> ChannelTensor:
    """Stack per-user channels sharing the array and grid along the user axis."""
    tensors = list(tensors)
    if not tensors:
        raise ValueError("tensors must be non-empty")
    first = tensors[0]
    for t in tensors[1:]:
        if t.values.shape[1:] != first.values.shape[1:]:
            raise ValueError("tensors must share (elements, frequencies) shape")
        if (
            t.grid.f_low_hz != first.grid.f_low_hz
            or t.grid.f_high_hz != first.grid.f_high_hz
            or t.grid.num_points != first.grid.num_points
        ):
            raise ValueError("tensors must share the frequency grid")
        if t.variant != first.variant:
            raise ValueError("tensors must share the variant")
    return ChannelTensor(
        values=np.concatenate([t.values for t in tensors], axis=0),
        grid=first.grid,
        variant=first.variant,
        seed=first.seed,
        geometry=first.geometry,
        config_sha256=first.config_sha256,
    )


@dataclass
class PathTable:
    """Per-element path parameters, all arrays of shape (M, L).

    ``amplitudes`` include wavefront spreading, pattern weighting, and the
    attenuation factors; ``phases`` are the carrier-frequency per-element
    phases including the reference phase.
    """

    amplitudes: np.ndarray
    delays: np.ndarray
    phases: np.ndarray
    distances: np.ndarray


def path_table(
    paths,
    geometry: ArrayGeometry,
    tx_pattern: AntennaPattern,
    rx_pattern: AntennaPattern,
    carrier_hz: float,
    aaf: np.ndarray,
    force_ff: bool = False,
) -> PathTable:
    """Per-element path amplitudes, delays, phases, and distances.

    Plane-wave paths keep their reference amplitude, delay, and distance at
    every element, with linear carrier phase along the array; the rest
    follow their spherical-wave expansion.
    """
    paths = list(paths)
    if not paths:
        raise ValueError("paths must be non-empty")
    carrier_hz = float(carrier_hz)
    aaf = np.asarray(aaf, dtype=float)
    if aaf.shape != (geometry.num_elements, len(paths)):
        raise ValueError(
            f"aaf shape {aaf.shape} != {(geometry.num_elements, len(paths))}"
        )
    amplitudes = np.empty_like(aaf)
    delays = np.empty_like(aaf)
    phases = np.empty_like(aaf)
    distances = np.empty_like(aaf)
    for l, path in enumerate(paths):
        if force_ff or path.model is WavefrontModel.FF:
            u = float(np.dot(direction_vector(path.aod), geometry.axis))
            m_idx = np.arange(geometry.num_elements)
            amplitudes[:, l] = path.amplitude
            delays[:, l] = path.delay
            phases[:, l] = path.phase - (
                2.0 * np.pi * carrier_hz * geometry.spacing * u / SPEED_OF_LIGHT
            ) * m_idx
            distances[:, l] = path.distance
        else:
            expansion = expand_path(path, geometry, carrier_hz)
            ref = expansion.reference_index
            ft = tx_pattern.field_gain(expansion.aod)
            fr = rx_pattern.field_gain(expansion.aoa)
            if ft[ref] == 0.0 or fr[ref] == 0.0:
                raise GeometryError(
                    f"path {l}: pattern gain at the reference direction is zero"
                )
            amplitudes[:, l] = (
                expansion.amplitudes * (ft / ft[ref]) * (fr / fr[ref])
            )
            delays[:, l] = expansion.delays
            phases[:, l] = expansion.phases
            distances[:, l] = expansion.distances
    return PathTable(
        amplitudes=amplitudes * aaf,
        delays=delays,
        phases=phases,
        distances=distances,
    )
