import http.server
import json
import subprocess
import sys
import threading
import warnings
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from finprep.cli import main
from finprep.experiment import CellError, ComparisonGrid, ExperimentConfig, evaluate, run_sweep
from finprep.metrics import MetricsReport
from finprep.preprocess import Technique
from finprep.report import (
    FetchError,
    PlotSpec,
    ReportError,
    cell_plot,
    emit_svg_plot,
    fetch_csv,
    format_value,
    nice_ticks,
    render_grid,
    render_sweep,
    render_table,
    series_plot,
)

SVG = "{http://www.w3.org/2000/svg}"
REPORT = MetricsReport(-0.24911, 0.227008, 0.33665, 0.4775, 0.76656, 0.76603, 1347, 3)


class TestFormat:
    @pytest.mark.parametrize(
        "value, text",
        [
            (0.227008, "0.22701"),
            (0.123455, "0.12346"),
            (0.123465, "0.12346"),
            (-0.000001, "0.00000"),
            (-0.24911, "-0.24911"),
            (12.0, "12.00000"),
        ],
    )
    def test_five_decimals_half_even(self, value, text):
        assert format_value(value) == text

    def test_full_precision(self):
        assert format_value(0.1 + 0.2, full_precision=True) == "0.30000000000000004"

    def test_markdown_grid(self):
        grid = ComparisonGrid(
            {(Technique.LINEAR, "polynomial"): REPORT, (Technique.LAGGED, "linear"): CellError("SeriesError", "x")},
            {Technique.LINEAR: 5387},
        )
        lines = render_grid(grid).splitlines()
        assert lines[0].startswith("| Data processing technique | Regression models | Validation MSE")
        assert lines[2] == "| Linear interpolation | Polynomial | -0.24911 | 0.22701 | 0.33665 | 0.47750 | 0.76656 | 0.76603 |"
        assert lines[3].count("ERR(SeriesError)") == 6
        assert lines[-1] == "Seed 42. Rows per technique: Linear interpolation 5387."

    def test_csv_grid(self):
        grid = ComparisonGrid({(Technique.LINEAR, "linear"): REPORT}, {})
        lines = render_grid(grid, "csv").splitlines()
        assert len(lines) == 2
        assert lines[1].split(",")[:3] == ["Linear interpolation", "Linear", "-0.24911"]

    def test_unknown_format(self):
        with pytest.raises(ReportError):
            render_grid(ComparisonGrid({}, {}), "html")
        with pytest.raises(ReportError):
            render_table(object())


@pytest.fixture(scope="module")
def default_sweep(income, price):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_sweep(income, price)


def test_sweep_table(default_sweep):
    text = render_sweep(default_sweep)
    rows = [l for l in text.splitlines() if l.startswith("| polynomial regression")]
    assert len(rows) == 13
    assert [r.split(" | ")[1] for r in rows] == [str(d) for d in ExperimentConfig().sweep_degrees]
    flagged = [r.split(" | ")[1] for r in rows if "rank-deficient" in r]
    assert flagged == [str(r.degree) for r in default_sweep.rows if r.ill_conditioned]
    assert "Peak adjusted R-squared at degree" in text


@pytest.fixture(scope="module")
def outcomes(datasets):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {d: evaluate(datasets[Technique.LINEAR], d, ExperimentConfig()) for d in (2, 32)}


class TestSvg:
    def parse(self, text):
        return ET.fromstring(text.encode("utf-8"))

    def curve_y(self, root):
        poly = root.find(f".//{SVG}polyline")
        pts = [tuple(map(float, p.split(","))) for p in poly.get("points").split()]
        return np.array([y for _, y in pts])

    @staticmethod
    def sign_changes(y):
        s = np.sign(np.diff(y, 2))
        s = s[s != 0]
        return int(np.sum(s[1:] != s[:-1]))

    def test_markers_and_curve(self, outcomes):
        out = outcomes[2]
        root = self.parse(emit_svg_plot(cell_plot(out, "degree 2")))
        assert root.get("version") == "1.1"
        assert len(root.findall(f".//{SVG}circle")) == len(out.x_test_scaled) == 1347
        assert len(root.findall(f".//{SVG}polyline")) == 1
        assert root.find(f"{SVG}title").text == "degree 2"

    def test_degree_two_curve_has_one_bend_direction(self, outcomes):
        # pixel coordinates are rounded, so look at the exact samples as well
        spec = cell_plot(outcomes[2], "d2")
        assert self.sign_changes(np.array([y for _, y in spec.curve])) == 0

    def test_degree_32_curve_oscillates(self, outcomes):
        spec = cell_plot(outcomes[32], "d32")
        assert self.sign_changes(np.array([y for _, y in spec.curve])) > 3
        root = self.parse(emit_svg_plot(spec))
        assert self.sign_changes(self.curve_y(root)) > 3

    def test_escaping(self):
        text = emit_svg_plot(PlotSpec(points=[(0, 0), (1, 1)], title="a < b & c"))
        assert self.parse(text).find(f"{SVG}title").text == "a < b & c"

    def test_series_plot(self, income):
        root = self.parse(emit_svg_plot(series_plot(income)))
        assert len(root.find(f".//{SVG}polyline").get("points").split()) == 60

    def test_nothing_to_plot(self):
        with pytest.raises(ReportError):
            emit_svg_plot(PlotSpec())

    def test_invalid_spec(self):
        with pytest.raises(ReportError):
            PlotSpec(points=[(0, float("nan"))])
        with pytest.raises(ReportError):
            PlotSpec(curve=[(1, 0), (0, 0)])

    def test_nice_ticks(self):
        assert nice_ticks(0, 10) == [0, 2, 4, 6, 8, 10]
        assert nice_ticks(-0.13, 0.97) == [0.0, 0.5]
        assert nice_ticks(-0.13, 0.83) == [0.0, 0.2, 0.4, 0.6, 0.8]
        assert nice_ticks(1, 1) == [1]


@pytest.fixture(scope="module")
def server():
    body = b"date,close\n2020-01-02,75.0875\n"

    class Handler(http.server.BaseHTTPRequestHandler):
        def do_GET(self):
            if self.path == "/prices.csv":
                self.send_response(200)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
            else:
                self.send_error(404)

        def log_message(self, *args):
            pass

    srv = http.server.HTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_port}", body
    srv.shutdown()


class TestFetch:
    def test_ok(self, server, tmp_path):
        base, body = server
        dest = fetch_csv(f"{base}/prices.csv", tmp_path / "p.csv")
        assert dest.read_bytes() == body

    def test_not_found(self, server, tmp_path):
        base, _ = server
        with pytest.raises(FetchError) as exc:
            fetch_csv(f"{base}/missing.csv", tmp_path / "p.csv")
        assert exc.value.status == 404
        assert list(tmp_path.iterdir()) == []

    def test_unwritable_destination_leaves_nothing(self, server, tmp_path):
        base, _ = server
        target = tmp_path / "dir"
        target.mkdir()
        with pytest.raises(OSError):
            fetch_csv(f"{base}/prices.csv", target)
        assert [p.name for p in tmp_path.iterdir()] == ["dir"]
        assert list(target.iterdir()) == []

    def test_bad_scheme(self, tmp_path):
        with pytest.raises(FetchError):
            fetch_csv("file:///etc/passwd", tmp_path / "x")

    def test_cli(self, server, tmp_path, capsys):
        base, body = server
        assert main(["fetch", f"{base}/prices.csv", "--out", str(tmp_path / "a.csv")]) == 0
        assert (tmp_path / "a.csv").read_bytes() == body
        assert main(["fetch", f"{base}/nope.csv", "--out", str(tmp_path / "b.csv")]) == 2
        assert main(["fetch", f"{base}/prices.csv"]) == 1


class TestCli:
    def run(self, capsys, *argv):
        code = main(list(argv))
        out = capsys.readouterr()
        return code, out.out, out.err

    def test_usage_errors(self, capsys):
        assert self.run(capsys, "bogus")[0] == 1
        assert self.run(capsys, "fit")[0] == 1
        assert self.run(capsys, "sweep", "--degrees", "2,x")[0] == 1

    def test_data_errors(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("date,net_income\n2009-02-30,1\n")
        code, _, err = self.run(capsys, "fit", "--technique", "linear", "--income", str(bad))
        assert code == 2 and "line 2" in err
        assert self.run(capsys, "fit", "--technique", "linear", "--income", str(tmp_path / "none.csv"))[0] == 2

    def test_preprocess(self, capsys):
        code, out, _ = self.run(capsys, "preprocess", "--technique", "lagged")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "date,x,y" and len(lines) == 43

    def test_fit_lagged(self, capsys):
        code, out, _ = self.run(capsys, "fit", "--technique", "lagged", "--degree", "2")
        assert code == 0
        assert "n_test = 11" in out and "Seed 42" in out

    def test_compare_deterministic(self, capsys):
        _, a, err = self.run(capsys, "compare")
        _, b, _ = self.run(capsys, "compare", "--jobs", "4")
        assert a == b
        assert "seed 42" in err
        assert len([l for l in a.splitlines() if l.startswith("| ")]) == 11

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 7, "sweep_degrees": [2, 3]}))
        code, out, err = self.run(capsys, "sweep", "--config", str(cfg), "--format", "csv")
        assert code == 0 and "seed 7" in err
        assert len(out.splitlines()) == 3
        assert self.run(capsys, "sweep", "--config", str(cfg), "--seed", "8")[2].strip().endswith("seed 8")

    def test_plot_to_file(self, capsys, tmp_path):
        out = tmp_path / "p.svg"
        assert self.run(capsys, "plot", "--raw", "price", "--out", str(out))[0] == 0
        ET.parse(out)

    def test_custom_income_column(self, capsys, tmp_path, income):
        path = tmp_path / "inc.csv"
        path.write_text("date,ni\n" + "".join(f"{d},{v}\n" for d, v in income.pairs()))
        _, default, _ = self.run(capsys, "fit", "--technique", "aggregation", "--degree", "1")
        code, custom, _ = self.run(capsys, "fit", "--technique", "aggregation", "--degree", "1", "--income", str(path))
        assert code == 0 and custom == default

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "finprep", "fit", "--technique", "aggregation", "--degree", "1", "--format", "csv"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[1].startswith("Aggregation,Linear,")
