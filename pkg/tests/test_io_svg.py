import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from sbmkit import io, svgplot


def test_canonical_json_handles_numpy_and_nonfinite():
    s = io.canonical_json({"b": np.float64(1.5), "a": [np.int64(2), math.nan, math.inf], "c": np.bool_(True)})
    d = json.loads(s)
    assert d == {"a": [2, "nan", "inf"], "b": 1.5, "c": True}
    assert s.index('"a"') < s.index('"b"')


def test_atomic_write_leaves_no_temp(tmp_path):
    p = io.write_json(tmp_path / "x" / "r.json", {"k": 1})
    assert json.loads(p.read_text()) == {"k": 1}
    assert [f.name for f in p.parent.iterdir()] == ["r.json"]


def test_atomic_write_failure_keeps_old_file(tmp_path):
    p = tmp_path / "r.json"
    io.write_json(p, {"k": 1})
    with pytest.raises(TypeError):
        io.atomic_write_text(p, None)
    assert json.loads(p.read_text()) == {"k": 1}
    assert [f.name for f in tmp_path.iterdir()] == ["r.json"]


def test_csv(tmp_path):
    p = io.write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.1], ["x", np.float64(2.5)]])
    assert p.read_text() == "a,b\n1,0.1\nx,2.5\n"


@pytest.mark.parametrize("logx,logy", [(False, False), (True, True)])
def test_svg_is_well_formed(tmp_path, logx, logy):
    p = tmp_path / "p.svg"
    svgplot.plot(p, [{"x": [0.1, 0.2, 0.4], "y": [1.0, 2.0, math.nan], "yerr": [0.1, 0.1, 0.1], "label": "a<b"},
                     {"x": [0.1, 0.4], "y": [3.0, 3.0], "style": "points", "label": "c"}],
                 title="t & u", xlabel="x", ylabel="y", logx=logx, logy=logy, hlines=[2.5])
    root = ET.parse(p).getroot()
    assert root.tag.endswith("svg")


def test_svg_empty_series(tmp_path):
    svgplot.plot(tmp_path / "e.svg", [{"x": [], "y": [], "label": "none"}])
    ET.parse(tmp_path / "e.svg")
