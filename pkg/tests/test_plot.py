import math

import pytest

from qae_conformal.errors import DomainError
from qae_conformal.plot import box_stats, read_report, render_boxplot


def report(path, rows):
    lines = ["repeat,seed,method,coverage,mean_length"]
    lines += [f"{i},0,{m},0.9,{v}" for i, (m, v) in enumerate(rows)]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_single_value_box_is_degenerate():
    b = box_stats("m", [3.0])
    assert b.q1 == b.median == b.q3 == b.lo_whisker == b.hi_whisker == b.mean == 3.0


def test_tukey_whiskers_and_outliers():
    b = box_stats("m", [1, 2, 3, 4, 5, 100])
    assert b.median == 3.5 and b.hi_whisker == 5 and b.outliers == (100.0,)


def test_infinite_values_counted():
    b = box_stats("m", [1.0, math.inf, 2.0, math.inf])
    assert b.n_infinite == 2 and b.hi_whisker == 2.0


def test_identical_reports_give_identical_boxes(tmp_path):
    a = report(tmp_path / "a.csv", [("x", 1.0), ("x", 2.0), ("y", 3.0)])
    b = report(tmp_path / "b.csv", [("x", 1.0), ("x", 2.0), ("y", 3.0)])
    svg = render_boxplot([a, b], tmp_path / "p.svg")
    boxes = [line for line in svg.splitlines() if line.startswith("<rect x=")]
    assert len(boxes) == 4
    strip = [line.split('y="', 1)[1] for line in boxes]
    assert strip[0] == strip[2] and strip[1] == strip[3]
    assert "a:x" in svg and "b:x" in svg


def test_deterministic_bytes(tmp_path):
    a = report(tmp_path / "a.csv", [("x", 1.0), ("x", 5.0), ("y", 2.0)])
    assert render_boxplot([a], tmp_path / "1.svg") == render_boxplot([a], tmp_path / "2.svg")
    assert (tmp_path / "1.svg").read_bytes() == (tmp_path / "2.svg").read_bytes()


def test_infinite_annotation(tmp_path):
    a = report(tmp_path / "a.csv", [("x", 1.0), ("x", "inf"), ("x", "inf")])
    assert "2 inf" in render_boxplot([a], tmp_path / "p.svg")


def test_read_report_groups(tmp_path):
    a = report(tmp_path / "a.csv", [("x", 1.0), ("y", 2.0), ("x", 3.0)])
    assert read_report(a) == {"x": [1.0, 3.0], "y": [2.0]}


def test_empty_input(tmp_path):
    with pytest.raises(DomainError):
        render_boxplot([], tmp_path / "p.svg")
    empty = report(tmp_path / "e.csv", [])
    with pytest.raises(DomainError):
        render_boxplot([empty], tmp_path / "p.svg")
