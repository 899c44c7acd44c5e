import csv
import json

import numpy as np
import pytest

from core.braid_words import parse_classical_word, parse_loop_word
from core.constructors import ConstructionResult, algorithm0, algorithm1
from core.exporters import (
    S3_HEADER,
    S4_HEADER,
    STRAND_HEADER,
    slice_rows,
    strand_rows,
    write_csv,
    write_field_samples,
    write_slices,
    write_strand_samples,
)
from core.parallel import ParallelTask, fan_out, map_ordered
from core.schemas import (
    BundleError,
    load_braid,
    load_bundle,
    read_json,
    validate_bundle,
    validate_report,
    write_json,
)
from core.vector_field import CSV_HEADER, FieldModel, random_points, sample_field
from config import RunConfig


@pytest.fixture(scope="module")
def ring_bundle():
    return algorithm1(parse_loop_word("r1 r1", 2), lam=0.3)


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


def test_bundle_file_validates_and_loads(tmp_path, ring_bundle):
    path = write_json(tmp_path / "out" / "loop.json", ring_bundle.to_bundle())

    data = load_bundle(path)
    model = validate_bundle(data)

    assert model.algorithm == "loop"
    assert model.lam == 0.3
    assert model.word.type == "loop"
    assert len(model.system.events) == len(ring_bundle.system.events)
    assert ConstructionResult.from_bundle(data).g == ring_bundle.g


def test_equal_bundles_are_byte_identical(tmp_path, ring_bundle):
    a = write_json(tmp_path / "a.json", ring_bundle.to_bundle())
    b = write_json(tmp_path / "b.json", ConstructionResult.from_bundle(read_json(a)).to_bundle())

    assert a.read_bytes() == b.read_bytes()


def test_malformed_bundles_are_reported(tmp_path):
    with pytest.raises(BundleError, match="malformed bundle"):
        validate_bundle({"algorithm": "knot", "g": {"vars": [], "terms": []}})
    with pytest.raises(BundleError, match="malformed bundle"):
        validate_bundle({"algorithm": "loop", "g": {"vars": ["x"], "terms": [{"exp": [1, 2], "re": 1.0}]}})

    no_poly = write_json(tmp_path / "empty.json", {"algorithm": "loop", "lambda": 1.0})
    with pytest.raises(BundleError, match="neither g nor f"):
        load_bundle(no_poly)
    with pytest.raises(BundleError, match="no such file"):
        read_json(tmp_path / "missing.json")
    (tmp_path / "broken.json").write_text("{", encoding="utf-8")
    with pytest.raises(BundleError, match="cannot read"):
        read_json(tmp_path / "broken.json")


def test_braid_files_and_reports_validate(tmp_path):
    braid = write_json(tmp_path / "word.json", {"strands": 3, "tokens": [{"kind": "rho", "index": 2, "sign": -1}]})

    assert load_braid(braid).tokens[0].sign == -1
    bad = write_json(tmp_path / "bad.json", {"strands": 0})
    with pytest.raises(BundleError, match="malformed braid file"):
        load_braid(bad)

    report = validate_report({"algorithm": "loop", "lambda": 0.2, "status": "PASS", "checks": [{"name": "lambda", "status": "SKIPPED"}]})
    assert report.lam == 0.2
    with pytest.raises(BundleError, match="malformed report"):
        validate_report({"algorithm": "loop", "status": "MAYBE"})


def test_strand_rows_sample_every_ring(ring_bundle):
    rows = strand_rows(ring_bundle, time_samples=16, ring_angles=8)

    assert len(rows) == 2 * 16 * 8
    assert max(row[-1] for row in rows) < 1e-8
    assert {(row[0], row[1]) for row in rows} == {(1, 1), (2, 1)}


def test_classical_strand_rows_use_the_braid_plane(tmp_path):
    result = algorithm0(parse_classical_word("s1 s1", 2), lam=0.5)
    config = RunConfig(time_samples=16, ring_angles=16)

    path = write_strand_samples(tmp_path / "strands.csv", result, config)

    rows = _read_rows(path)
    assert tuple(rows[0]) == STRAND_HEADER
    assert len(rows) == 1 + 2 * 16
    assert all(float(row[6]) == 0.0 for row in rows[1:])


def test_slice_files_follow_the_slice_count(tmp_path, ring_bundle):
    config = RunConfig(ring_angles=16, continuation_step=0.05, threads=2)

    paths = write_slices(tmp_path / "slices", ring_bundle, 2, config)

    assert [p.name for p in paths] == ["slice_000.csv", "slice_001.csv"]
    rows = _read_rows(paths[1])
    assert tuple(rows[0]) == S4_HEADER
    assert len(rows) == 1 + 2 * 16
    point = np.array([float(v) for v in rows[1][3:6]])
    assert float(point @ point) + float(rows[1][6]) ** 2 == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError, match="positive"):
        write_slices(tmp_path, ring_bundle, 0, config)


def test_classical_slices_carry_the_stereographic_image(tmp_path):
    result = algorithm0(parse_classical_word("s1 s1", 2), lam=0.4)
    config = RunConfig(continuation_step=0.05)

    (path,) = write_slices(tmp_path, result, 1, config)

    rows = _read_rows(path)
    assert tuple(rows[0]) == S3_HEADER
    assert len(rows) == 1 + 2


def test_field_samples_csv(tmp_path, ring_bundle):
    model = FieldModel(ring_bundle.g)
    points, times = random_points(5, 0.5, seed=3)

    path = write_field_samples(tmp_path / "field.csv", sample_field(model, points, times))

    rows = _read_rows(path)
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 6
    assert float(rows[1][0]) == points[0, 0]


def test_csv_cells_keep_integers_and_full_precision(tmp_path):
    path = write_csv(tmp_path / "cells.csv", ("a", "b"), [[np.int64(3), 0.1 + 0.2]])

    assert _read_rows(path)[1] == ["3", repr(0.1 + 0.2)]


def test_fan_out_keeps_submission_order_and_collects_errors():
    def square(k):
        if k == 3:
            raise RuntimeError("three")
        return k * k

    outcome = fan_out([ParallelTask(fn=square, args=(k,), label=str(k)) for k in range(6)], max_workers=3)

    assert not outcome.all_succeeded
    assert set(outcome.errors) == {3}
    assert outcome.successful() == [0, 1, 4, 16, 25]
    assert map_ordered(lambda k: -k, [1, 2, 3], 2) == [-1, -2, -3]
