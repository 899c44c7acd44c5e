"""CSV plot data: strand samples, S^4 / S^3 slices and vector-field samples."""
from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from config import RunConfig

from .constructors import Algorithm, ConstructionResult
from .parallel import ParallelTask, fan_out
from .poly_algebra import eval_batch
from .strand_param import SystemKind
from .trig_interp import TWO_PI
from .vector_field import CSV_HEADER, FieldSample
from .verifier import SpherePoints, VerificationError, inverse_stereographic, s3_slice, s4_slice

logger = logging.getLogger(__name__)

STRAND_HEADER = ("component", "strand", "t", "phi", "x", "y", "z", "abs_g")
S4_HEADER = ("component", "strand", "t", "x", "y", "z", "r")
S3_HEADER = ("component", "strand", "t", "re_u", "im_u", "r", "x1", "x2", "x3")


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([_cell(v) for v in row])
            count += 1
    logger.debug("Wrote %d rows to %s", count, path)
    return path


def _cell(value: object) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def strand_rows(
    result: ConstructionResult,
    time_samples: int = 256,
    ring_angles: int = 64,
) -> List[List[float]]:
    """Points of the strand parametrization at the result's lambda, with |g| there.

    Loop systems sample each ring at ``ring_angles`` angles; classical systems
    give one point per time sample (phi = 0, z = 0) and |g| at u = lambda (X + iY).
    """
    system = result.system
    if system is None:
        raise VerificationError("bundle carries no strand system")
    lam = result.lam
    times = np.linspace(0.0, TWO_PI, time_samples, endpoint=False)
    loop = system.kind == SystemKind.LOOP
    angles = np.linspace(0.0, TWO_PI, ring_angles, endpoint=False) if loop else np.zeros(1)
    tt, pp = (a.ravel() for a in np.meshgrid(times, angles, indexing="ij"))
    rows: List[List[float]] = []
    for c, j in system.strands():
        if loop:
            pts = lam * system.ring_points((c, j), tt, pp)
            values = {"x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2], "et": np.exp(1j * tt)}
        else:
            u = lam * (system.x((c, j), tt) + 1j * system.y((c, j), tt))
            pts = np.stack([u.real, u.imag, np.zeros_like(tt)], axis=-1)
            values = {"u": u, "et": np.exp(1j * tt)}
        if "ec" in result.g.variables:
            values["ec"] = np.ones_like(tt, dtype=complex)  # chi = 0 sheet
        g_abs = np.abs(eval_batch(result.g, values))
        for k in range(len(tt)):
            rows.append([c, j, tt[k], pp[k], pts[k, 0], pts[k, 1], pts[k, 2], g_abs[k]])
    return rows


def write_strand_samples(path: Union[str, Path], result: ConstructionResult, config: Optional[RunConfig] = None) -> Path:
    config = config or RunConfig()
    return write_csv(path, STRAND_HEADER, strand_rows(result, config.time_samples, config.ring_angles))


def _strand_ids(result: ConstructionResult, sphere: SpherePoints) -> np.ndarray:
    strands = result.system.strands()
    return np.array([strands[label] for label in sphere.labels])


def slice_rows(result: ConstructionResult, sphere: SpherePoints) -> List[List[float]]:
    ids = _strand_ids(result, sphere)
    rows: List[List[float]] = []
    classical = result.algorithm == Algorithm.CLASSICAL
    if classical:
        u = sphere.points[:, 0] + 1j * sphere.points[:, 1]
        mapped = inverse_stereographic(u, sphere.v())
    for k in np.flatnonzero(sphere.found):
        c, j = ids[k]
        if classical:
            rows.append([c, j, sphere.times[k], *sphere.points[k], sphere.radii[k], *mapped[k]])
        else:
            rows.append([c, j, sphere.times[k], *sphere.points[k], sphere.radii[k]])
    return rows


def write_slices(
    out_dir: Union[str, Path],
    result: ConstructionResult,
    count: int,
    config: Optional[RunConfig] = None,
) -> List[Path]:
    """``count`` CSV files slice_000.csv ... at t = 2 pi k / count.

    Loop constructions give the points Z(C, j, t, phi) on S^4; classical ones
    give (u, v) on S^3 together with their stereographic image in R^3.
    """
    config = config or RunConfig()
    if count < 1:
        raise ValueError("slice count must be positive")
    out_dir = Path(out_dir)
    classical = result.algorithm == Algorithm.CLASSICAL
    header = S3_HEADER if classical else S4_HEADER

    def one(k: int) -> Path:
        t = TWO_PI * k / count
        if classical:
            sphere = s3_slice(result, config, times=np.array([t]))
        else:
            sphere = s4_slice(result, t, config)
        missing = int(np.count_nonzero(~sphere.found))
        if missing:
            logger.warning("Slice t=%.4f: %d tracked points never reached the sphere", t, missing)
        return write_csv(out_dir / f"slice_{k:03d}.csv", header, slice_rows(result, sphere))

    tasks = [ParallelTask(fn=one, args=(k,), label=f"slice {k}") for k in range(count)]
    outcome = fan_out(tasks, max_workers=config.threads)
    if not outcome.all_succeeded:
        first = min(outcome.errors)
        raise VerificationError(f"slice {first} failed: {outcome.errors[first]}")
    paths: List[Path] = outcome.results
    logger.info("Wrote %d slice files to %s", count, out_dir)
    return paths


def write_field_samples(path: Union[str, Path], samples: Sequence[FieldSample]) -> Path:
    return write_csv(path, CSV_HEADER, (s.row() for s in samples))
