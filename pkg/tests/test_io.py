import math

import numpy as np
import pytest

from lalcurve.curves import compare_table, curve_breakpoints
from lalcurve.io import (
    DataError,
    curve_to_csv,
    export,
    ingest,
    read_curve_csv,
    read_losses,
    render_svg,
    table_to_csv,
)
from lalcurve.losses import LossSpec
from lalcurve.sample import build_sample


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return p

    return _write


class TestReadLosses:
    def test_loss_column(self, write):
        s = ingest(write("a.csv", "loss\n0.3\n0.1\n"))
        assert list(s.values) == [0.1, 0.3]

    def test_regression_records(self, write):
        batch = read_losses(write("r.csv", "y,y_hat\n3,5\n"), LossSpec("overshoot"))
        assert list(batch.values) == [2.0]

    def test_classification_records(self, write):
        p = write("c.csv", "label,p_0,p_1,p_2\n1,0.1,0.7,0.2\n0,0.5,0.25,0.25\n")
        batch = read_losses(p, LossSpec("categorical_nll"))
        np.testing.assert_allclose(batch.values, [-math.log(0.7), -math.log(0.5)])

    def test_density_records(self, write):
        p = write("d.csv", "z_0,z_1\n1,0\n0,0\n")
        batch = read_losses(p, LossSpec("gaussian_nll", mean=[0, 0], cov=[[1, 0], [0, 1]]))
        np.testing.assert_allclose(batch.values, [1.0, 0.0], atol=1e-15)

    def test_nan_names_line(self, write):
        with pytest.raises(DataError, match="line 2"):
            read_losses(write("n.csv", "loss\nNaN\n"))

    def test_bad_cell_names_line(self, write):
        with pytest.raises(DataError, match="line 3"):
            read_losses(write("b.csv", "loss\n1.0\nabc\n"))

    def test_ragged_row(self, write):
        with pytest.raises(DataError, match="line 2"):
            read_losses(write("g.csv", "y,y_hat\n1\n"), LossSpec("absolute"))

    def test_spec_required_for_records(self, write):
        with pytest.raises(DataError, match="loss spec"):
            read_losses(write("r.csv", "y,y_hat\n3,5\n"))

    def test_spec_rejected_for_losses(self, write):
        with pytest.raises(DataError):
            read_losses(write("a.csv", "loss\n1\n"), LossSpec("absolute"))

    def test_kind_must_match_layout(self, write):
        with pytest.raises(DataError, match="does not apply"):
            read_losses(write("r.csv", "y,y_hat\n3,5\n"), LossSpec("categorical_nll"))

    def test_invalid_probabilities_name_line(self, write):
        with pytest.raises(DataError, match="line 2"):
            read_losses(write("c.csv", "label,p_0,p_1\n0,1.5,0.2\n"), LossSpec("categorical_nll"))
        with pytest.raises(DataError, match="line 3"):
            read_losses(write("c.csv", "label,p_0,p_1\n0,0.5,0.5\n2,0.5,0.5\n"), LossSpec("categorical_nll"))

    def test_unknown_columns(self, write):
        with pytest.raises(DataError, match="unrecognised"):
            read_losses(write("x.csv", "foo\n1\n"))

    def test_empty(self, write):
        with pytest.raises(DataError):
            read_losses(write("e.csv", ""))
        with pytest.raises(DataError, match="no data"):
            read_losses(write("h.csv", "loss\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            read_losses(tmp_path / "missing.csv")

    def test_saturation_is_reported(self, write):
        p = write("c.csv", "label,p_0,p_1\n0,0.0,1.0\n1,0.5,0.5\n")
        batch = read_losses(p, LossSpec("categorical_nll"))
        assert batch.saturated == [0]
        assert math.isfinite(batch.values[0])

    def test_support_bounds(self, write):
        p = write("a.csv", "loss\n0.5\n2.0\n")
        with pytest.raises(DataError):
            ingest(p, support_max=1.0)
        assert ingest(p, support_min=0.0).support_min == 0.0


class TestJson:
    def test_flat_array(self, write):
        assert list(read_losses(write("a.json", "[0.3, 0.1]")).values) == [0.3, 0.1]

    def test_objects(self, write):
        batch = read_losses(write("r.json", '[{"y": 3, "y_hat": 5}, {"y": 1, "y_hat": 0}]'), LossSpec("absolute"))
        assert list(batch.values) == [2.0, 1.0]

    def test_non_finite_constant(self, write):
        with pytest.raises(DataError, match="non-finite"):
            read_losses(write("n.json", "[1.0, NaN]"))

    def test_syntax_error_names_line(self, write):
        with pytest.raises(DataError, match="line 2"):
            read_losses(write("s.json", "[1.0,\n oops]"))

    def test_mismatched_keys(self, write):
        with pytest.raises(DataError, match="element 1"):
            read_losses(write("k.json", '[{"loss": 1}, {"los": 2}]'))

    def test_format_override(self, write):
        assert list(read_losses(write("a.txt", "[2.0]"), fmt="json").values) == [2.0]


class TestExport:
    def test_curve_round_trip(self):
        c = curve_breakpoints(build_sample([3.0, 1.0, 2.5, 0.25]), 3, 0.5)
        text = curve_to_csv(c)
        assert text.splitlines()[-1].startswith("0.0,inf,5,")
        assert read_curve_csv(text) == c.breakpoints()

    def test_table_csv_is_long_format(self):
        t = compare_table({"a": build_sample([1.0, 2.0]), "b": build_sample([3.0, 4.0])}, 1, 1.0, [0.1, 0.5])
        lines = table_to_csv(t).splitlines()
        assert lines[0] == "alpha,sample,limit,k,exact_coverage,mean_loss"
        assert len(lines) == 5
        assert lines[1].startswith("0.1,a,inf,3,")

    def test_svg_is_deterministic(self):
        c = curve_breakpoints(build_sample(np.arange(12.0)), 2, 0.5, name="demo")
        a, b = render_svg(c, "t"), render_svg(c, "t")
        assert a == b
        assert a.startswith("<svg") and a.rstrip().endswith("</svg>")

    def test_svg_legend_for_two_samples(self):
        t = compare_table({"base": build_sample([1.0, 2.0, 3.0]), "new": build_sample([2.0, 3.0, 9.0])}, 1, 1.0, [0.3, 0.6])
        svg = render_svg(t)
        assert "base" in svg and "new" in svg
        assert svg.count("no guarantee") == 2

    def test_svg_escapes_names(self):
        c = curve_breakpoints(build_sample([1.0, 2.0]), 1, 1.0, name="a<b&c")
        assert "a&lt;b&amp;c" in render_svg(c)

    def test_export_writes_file(self, tmp_path):
        c = curve_breakpoints(build_sample([1.0, 2.0]), 1, 1.0)
        p = export(c, "csv", tmp_path / "c.csv")
        assert p.read_text() == curve_to_csv(c)
        p = export(c, "svg", tmp_path / "c.svg")
        assert p.read_text() == render_svg(c)
