import dataclasses

import pytest

from rtnoise.datasets import (
    DATASET_NAMES,
    DataPoint,
    Dataset,
    dataset_to_csv,
    load_dataset,
    read_csv_dataset,
    write_csv_dataset,
)
from rtnoise.errors import DatasetNotFoundError

# Independent transcription of the published tables, kept flat on purpose.
GOLDEN = {
    "snr_vs_r": [
        (0.013, 0.004, -6.222, 0.740), (0.030, 0.004, -4.440, 0.432), (0.040, 0.006, -3.010, 0.440),
        (0.080, 0.008, -1.105, 0.388), (0.340, 0.021, -0.530, 0.442), (1.130, 0.052, -0.086, 0.392),
        (1.510, 0.057, -2.201, 0.241), (3.290, 0.290, -3.502, 0.667), (7.180, 0.680, -6.434, 0.727),
    ],
    "snr_vs_ccg": [
        (2.91, 0.111, 9.91, 1.274), (7.23, 0.217, 7.50, 0.787), (19.88, 0.613, 6.23, 0.714),
        (51.59, 1.384, 5.17, 0.559), (135.28, 4.392, 3.33, 0.577),
    ],
    "ccg_vs_pump": [
        (13, 2, 2.91, 0.111), (25, 2, 7.23, 0.217), (50, 2, 19.88, 0.613),
        (104, 3, 51.59, 1.384), (190, 3, 135.28, 4.392),
    ],
    "ccg_vs_a1": [(1, 0, 41.2, 3.2), (1.4, 0, 27.2, 1.7), (2, 0, 19.0, 1.7), (2.7, 0, 14.3, 1.8), (4, 0, 10.0, 1.7)],
    "ccg_vs_a2": [(1, 0, 44.8, 2.5), (1.3, 0, 22.2, 1.5), (1.9, 0, 10.0, 1.0), (2.8, 0, 6.2, 1.0), (3.8, 0, 2.3, 0.3)],
    "fidelity_vs_snr": [
        (9.91, 1.27, 0.96, 0.025), (7.50, 0.79, 0.94, 0.03), (6.23, 0.71, 0.92, 0.045),
        (5.17, 0.56, 0.89, 0.03), (3.29, 0.58, 0.85, 0.015),
    ],
}
FIDELITY_INTERVALS = [(0.93, 0.98), (0.90, 0.96), (0.86, 0.95), (0.85, 0.91), (0.83, 0.86)]


def test_names():
    assert set(DATASET_NAMES) == set(GOLDEN)


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_transcription(name):
    ds = load_dataset(name)
    assert ds.name == name
    got = [(p.x, p.x_err, p.y, p.y_err) for p in ds.points]
    assert got == pytest.approx(GOLDEN[name], abs=1e-12)


def test_fidelity_intervals():
    ds = load_dataset("fidelity_vs_snr")
    assert [(p.y_low, p.y_high) for p in ds.points] == FIDELITY_INTERVALS


def test_spot_rows():
    assert load_dataset("snr_vs_r").points[0] == DataPoint(0.013, 0.004, -6.222, 0.740)
    assert load_dataset("ccg_vs_pump").points[0] == DataPoint(13, 2, 2.91, 0.111)
    assert load_dataset("ccg_vs_a2").points[-1] == DataPoint(3.8, 0, 2.3, 0.3)


def test_unknown():
    with pytest.raises(DatasetNotFoundError):
        load_dataset("table9")


def test_read_only():
    ds = load_dataset("snr_vs_r")
    with pytest.raises(dataclasses.FrozenInstanceError):
        ds.points[0].x = 1.0
    with pytest.raises(dataclasses.FrozenInstanceError):
        ds.name = "other"


def test_invariants():
    with pytest.raises(ValueError):
        DataPoint(1, -1, 1, 1)
    with pytest.raises(ValueError):
        Dataset("tiny", (DataPoint(1, 0, 1, 1),) * 2)


@pytest.mark.parametrize("name", DATASET_NAMES)
def test_csv_round_trip(name, tmp_path):
    ds = load_dataset(name)
    path = tmp_path / f"{name}.csv"
    write_csv_dataset(ds, path, header="comment line\nsecond")
    back = read_csv_dataset(path, name)
    assert [(p.x, p.x_err, p.y, p.y_err) for p in back.points] == [(p.x, p.x_err, p.y, p.y_err) for p in ds.points]
    assert path.read_text().startswith("# comment line\n# second\nx,x_err,y,y_err\n")


def test_csv_missing_error_columns(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x,y\n1,2\n2,3\n3,4\n")
    ds = read_csv_dataset(path)
    assert ds.name == "d"
    assert list(ds.y_err) == [0, 0, 0]


def test_csv_bad_header(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv_dataset(path)


def test_csv_text_stable():
    ds = load_dataset("ccg_vs_a1")
    assert dataset_to_csv(ds) == dataset_to_csv(ds)
    assert dataset_to_csv(ds).splitlines()[1] == "1.0,0.0,41.2,3.2"
