"""Deterministic on-disk formats.

All writers are byte-deterministic for identical inputs: floats are
serialized with ``repr`` (shortest round-trip form), JSON keys are sorted,
and no timestamps or environment details are recorded.  Channel tensors are
stored as little-endian complex64 binaries in C order next to a JSON header
describing shape, grid, and provenance (seed and configuration hash).
"""

from __future__ import annotations

import csv
import hashlib
import json
import os

import numpy as np
import yaml

from .channel import ChannelTensor, FrequencyGrid
from .errors import ConfigError
from .geometry import Angles, ArrayGeometry
from .nearfield import PathRecord, Stationarity, WavefrontModel

TENSOR_FORMAT_VERSION = 1
PATHS_FORMAT_VERSION = 1

PATH_COLUMNS = [
    "model",
    "stationarity",
    "amplitude",
    "phase_rad",
    "delay_s",
    "distance_m",
    "aod_azimuth_rad",
    "aod_elevation_rad",
    "aoa_azimuth_rad",
    "aoa_elevation_rad",
    "aaf",
]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path, header, rows) -> None:
    """Write a CSV table with deterministic float formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def config_sha256(config: dict) -> str:
    """Hash of the canonical JSON form of a configuration dict."""
    canonical = json.dumps(
        config, sort_keys=True, separators=(",", ":"), ensure_ascii=True
    )
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_yaml(path, config: dict) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config, fh, sort_keys=True, default_flow_style=False)


def read_yaml(path) -> dict:
    try:
        with open(path) as fh:
            loaded = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return loaded


def write_paths_csv(path, paths) -> None:
    """Serialize a path list; ``read_paths_csv`` round-trips it losslessly."""
    rows = []
    for p in paths:
        aaf = ";".join(repr(float(v)) for v in p.aaf) if p.aaf is not None else ""
        rows.append(
            [
                p.model.value,
                p.stationarity.value,
                p.amplitude,
                p.phase,
                p.delay,
                p.distance,
                p.aod.azimuth,
                p.aod.elevation,
                p.aoa.azimuth,
                p.aoa.elevation,
                aaf,
            ]
        )
    write_table(path, PATH_COLUMNS, rows)


def read_paths_csv(path) -> list:
    """Parse a path list written by :func:`write_paths_csv`."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PATH_COLUMNS:
            raise ConfigError(
                f"{path}: expected columns {PATH_COLUMNS}, got {reader.fieldnames}"
            )
        paths = []
        for i, row in enumerate(reader):
            try:
                aaf = (
                    np.array([float(v) for v in row["aaf"].split(";")])
                    if row["aaf"]
                    else None
                )
                paths.append(
                    PathRecord(
                        model=WavefrontModel(row["model"]),
                        stationarity=Stationarity(row["stationarity"]),
                        amplitude=float(row["amplitude"]),
                        phase=float(row["phase_rad"]),
                        delay=float(row["delay_s"]),
                        distance=float(row["distance_m"]),
                        aod=Angles(
                            float(row["aod_azimuth_rad"]),
                            float(row["aod_elevation_rad"]),
                        ),
                        aoa=Angles(
                            float(row["aoa_azimuth_rad"]),
                            float(row["aoa_elevation_rad"]),
                        ),
                        aaf=aaf,
                    )
                )
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"{path}: row {i + 1}: {exc}") from exc
    if not paths:
        raise ConfigError(f"{path}: no paths found")
    return paths


def write_channel(basepath, tensor: ChannelTensor, extra_meta: dict = None) -> None:
    """Write ``<basepath>.bin`` (little-endian complex64) and ``<basepath>.json``."""
    values = np.ascontiguousarray(tensor.values).astype("<c8")
    with open(f"{basepath}.bin", "wb") as fh:
        fh.write(values.tobytes(order="C"))
    meta = {
        "format_version": TENSOR_FORMAT_VERSION,
        "dtype": "complex64",
        "byte_order": "little",
        "order": "C",
        "shape": list(tensor.values.shape),
        "axes": ["user", "element", "frequency"],
        "grid": {
            "f_low_hz": tensor.grid.f_low_hz,
            "f_high_hz": tensor.grid.f_high_hz,
            "num_points": tensor.grid.num_points,
        },
        "variant": tensor.variant,
        "seed": tensor.seed,
        "config_sha256": tensor.config_sha256,
    }
    if tensor.geometry is not None:
        meta["array"] = {
            "num_elements": tensor.geometry.num_elements,
            "spacing_m": tensor.geometry.spacing,
            "axis": [float(v) for v in tensor.geometry.axis],
            "origin": [float(v) for v in tensor.geometry.origin],
            "reference_index": tensor.geometry.reference_index,
        }
    if extra_meta:
        meta.update(extra_meta)
    write_json(f"{basepath}.json", meta)


def read_channel(basepath) -> tuple:
    """Read a channel written by :func:`write_channel`.

    ``basepath`` may include the ``.json`` suffix.  Returns ``(tensor,
    meta)``.
    """
    base = str(basepath)
    if base.endswith(".json"):
        base = base[: -len(".json")]
    meta_path = f"{base}.json"
    bin_path = f"{base}.bin"
    for p in (meta_path, bin_path):
        if not os.path.exists(p):
            raise ConfigError(f"missing channel file {p}")
    meta = read_json(meta_path)
    if meta.get("format_version") != TENSOR_FORMAT_VERSION:
        raise ConfigError(
            f"{meta_path}: unsupported format_version {meta.get('format_version')!r}"
        )
    if meta.get("dtype") != "complex64" or meta.get("byte_order") != "little":
        raise ConfigError(f"{meta_path}: unsupported encoding")
    shape = tuple(meta["shape"])
    with open(bin_path, "rb") as fh:
        raw = fh.read()
    expected = int(np.prod(shape)) * 8
    if len(raw) != expected:
        raise ConfigError(
            f"{bin_path}: size {len(raw)} does not match shape {shape}"
        )
    values = np.frombuffer(raw, dtype="<c8").reshape(shape)
    grid = FrequencyGrid(**meta["grid"])
    geometry = None
    if "array" in meta:
        arr = meta["array"]
        geometry = ArrayGeometry(
            num_elements=arr["num_elements"],
            spacing=arr["spacing_m"],
            axis=np.asarray(arr["axis"]),
            origin=np.asarray(arr["origin"]),
            reference_index=arr["reference_index"],
        )
    tensor = ChannelTensor(
        values=values.astype(complex),
        grid=grid,
        variant=meta.get("variant", "nf-sns"),
        seed=meta.get("seed"),
        geometry=geometry,
        config_sha256=meta.get("config_sha256"),
    )
    return tensor, meta
