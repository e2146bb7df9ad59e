"""File formats: provenance-stamped CSV, HSICUBE v1 text cubes and 16-bit PGM.

All writers go through a temporary file and ``os.replace`` so a crash never
leaves a half-written output behind.
"""

from __future__ import annotations

import contextlib
import hashlib
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from spectrobench.core import ValidationError
from spectrobench.spectral_filtering import HyperspectralCube

TOOL_NAME = "spectro-bench"


@contextlib.contextmanager
def atomic_open(path: str | Path, mode: str = "w"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"newline": "", "encoding": "utf-8"})) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def config_hash(config: Mapping[str, object]) -> str:
    canon = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, command: str, config_digest: str, header: Iterable[str], rows: Iterable[Iterable]) -> Path:
    path = Path(path)
    with atomic_open(path) as fh:
        fh.write(f"# {TOOL_NAME} {command} {config_digest}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Return (header, rows) of a CSV written by :func:`write_csv`, skipping comments."""
    lines = [l for l in Path(path).read_text().splitlines() if l and not l.startswith("#")]
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


def write_cube(cube: HyperspectralCube, path) -> Path:
    path = Path(path)
    n_lam, h, w = cube.data.shape
    with atomic_open(path) as fh:
        fh.write(f"HSICUBE v1 {w} {h} {n_lam}\n")
        fh.write(" ".join(repr(float(l)) for l in cube.wavelengths) + "\n")
        for k in range(n_lam):
            for row in cube.data[k]:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    return path


def read_cube(path) -> HyperspectralCube:
    text = Path(path).read_text().split("\n", 2)
    if len(text) < 3:
        raise ValidationError(f"{path}: truncated HSICUBE file")
    head = text[0].split()
    if len(head) != 5 or head[:2] != ["HSICUBE", "v1"]:
        raise ValidationError(f"{path}: expected header 'HSICUBE v1 width height nlambda'")
    try:
        w, h, n_lam = (int(t) for t in head[2:])
        lam = np.array([float(t) for t in text[1].split()])
        vals = np.array([float(t) for t in text[2].split()])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    if lam.size != n_lam:
        raise ValidationError(f"{path}: header says {n_lam} wavelengths, found {lam.size}")
    if vals.size != w * h * n_lam:
        raise ValidationError(f"{path}: expected {w * h * n_lam} samples, found {vals.size}")
    return HyperspectralCube(lam, vals.reshape(n_lam, h, w))


def write_pgm16(image: np.ndarray, path) -> float:
    """Binary 16-bit PGM scaled so the maximum maps to 65535; returns the scale."""
    image = np.asarray(image, dtype=float)
    peak = float(image.max())
    scale = 65535.0 / peak if peak > 0 else 0.0
    data = np.clip(np.round(image * scale), 0, 65535).astype(">u2")
    h, w = image.shape
    with atomic_open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())
    return scale


def read_pgm16(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValidationError(f"{path}: not a binary PGM")
    w, h = (int(t) for t in parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2").reshape(h, w)
