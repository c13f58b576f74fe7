import csv
import io
import json
import math

import pytest
from click.testing import CliRunner
from hypothesis import given
from hypothesis import strategies as st

from qpgreen import cli, latsums
from qpgreen.checks import TABLE1_ROW_E
from qpgreen.errors import ConfigError

TABLE1_ARGS = ["--case", "1in2", "--lambda-ratio", "0.23", "--theta", "pi/8", "--eta", "0.011"]


@pytest.fixture
def runner():
    return CliRunner()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_green_reference_point(runner):
    res = runner.invoke(cli.main, ["green", *TABLE1_ARGS, "--points", "0.2,0.03"])
    assert res.exit_code == 0, res.output
    (r,) = rows(res.output)
    assert list(r) == list(cli.GREEN_COLUMNS_2D)
    v = complex(float(r["re_g"]), float(r["im_g"]))
    assert max(abs((v - TABLE1_ROW_E[0]).real), abs((v - TABLE1_ROW_E[0]).imag)) <= 1e-12
    assert r["representation"] == "ewald" and int(r["terms_used"]) <= 1000


def test_dual_rejects_in_plane(runner):
    res = runner.invoke(cli.main, ["green", *TABLE1_ARGS, "--rep", "dual", "--points", "0.2,0.0"])
    assert res.exit_code == cli.EXIT_SINGULAR


def test_laplace_at_zero_bloch(runner):
    res = runner.invoke(cli.main, ["green", "--case", "1in2", "--rep", "laplace", "--kpar", "0", "--points", "0.5,0;0.2,0.03"])
    assert res.exit_code == 0, res.output
    for r in rows(res.output):
        assert math.isfinite(float(r["re_g"]))


def test_ewald_reduces_to_cell(runner):
    base = ["green", "--case", "1in2", "--sigma", "2.3", "--kpar", "0.4", "--eta", "0.1", "--format", "json"]
    a = json.loads(runner.invoke(cli.main, [*base, "--points", "0.2,0.1"]).output)[0]
    b = json.loads(runner.invoke(cli.main, [*base, "--points", "3.2,0.1"]).output)[0]
    va, vb = complex(a["re_g"], a["im_g"]), complex(b["re_g"], b["im_g"])
    assert abs(vb - complex(math.cos(1.2), math.sin(1.2)) * va) < 1e-13
    assert a["schema_version"] == cli.SCHEMA_VERSION


def test_direct_route(runner):
    res = runner.invoke(cli.main, ["green", "--case", "1in3", "--sigma", "2", "--kpar", "0.5", "--rep", "direct",
                                   "--damping", "0.05", "--points", "0.1,0.2,0.1"])
    assert res.exit_code == 0, res.output
    assert rows(res.output)[0]["representation"] == "direct"


def test_grid_is_deterministic_across_workers(runner):
    args = ["green", "--case", "2in3", "--sigma", "2.3", "--kpar", "0.4,-0.7", "--eta", "0.1",
            "--grid", "0:1:3,0:0.2:2,0.1:0.3:2"]
    one = runner.invoke(cli.main, [*args, "--workers", "1"])
    two = runner.invoke(cli.main, [*args, "--workers", "2"])
    assert one.exit_code == 0 and one.output == two.output
    assert len(rows(one.output)) == 12


def test_output_file_bit_identical(runner, tmp_path):
    outs = []
    for n in range(2):
        p = tmp_path / f"out{n}.csv"
        res = runner.invoke(cli.main, ["green", *TABLE1_ARGS, "--points", "0.2,0.03;0.2,0.003", "-o", str(p)])
        assert res.exit_code == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


def test_config_file_with_override(runner, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"case": "1in2", "lambda-ratio": 0.23, "theta": "pi/8", "eta": 0.5, "points": "0.2,0.03"}))
    res = runner.invoke(cli.main, ["green", "--config", str(cfg), "--eta", "0.011", "--format", "json"])
    assert res.exit_code == 0, res.output
    r = json.loads(res.output)[0]
    assert abs(complex(r["re_g"], r["im_g"]) - TABLE1_ROW_E[0]) < 1e-12


@pytest.mark.parametrize(
    "extra",
    [
        ["--sigma", "2", "--lambda-ratio", "0.3"],
        ["--theta", "0.1", "--kpar", "0.2", "--sigma", "2"],
        ["--sigma", "-1"],
        ["--sigma", "2", "--format", "xml"],
        ["--sigma", "2", "--unit", "furlong"],
    ],
)
def test_config_errors(runner, extra):
    res = runner.invoke(cli.main, ["green", "--case", "1in2", "--points", "0.2,0.1", *extra])
    assert res.exit_code == cli.EXIT_CONFIG


def test_missing_points(runner):
    assert runner.invoke(cli.main, ["green", "--case", "1in2", "--sigma", "2"]).exit_code == cli.EXIT_CONFIG


def test_lattice_point_rejected(runner):
    res = runner.invoke(cli.main, ["green", "--case", "1in2", "--sigma", "2", "--points", "1,0"])
    assert res.exit_code == cli.EXIT_SINGULAR


def test_dlm_selection_flags(runner):
    res = runner.invoke(cli.main, ["dlm", "--case", "1in3", "--sigma", "1.3", "--kpar", "0.8", "--eta", "0.3", "--lmax", "3"])
    assert res.exit_code == 0, res.output
    rs = rows(res.output)
    assert list(rs[0]) == list(cli.DLM_COLUMNS)
    for r in rs:
        l, m = int(r["l"]), int(r["m"])
        if (l + m) % 2:
            assert r["flags"] == "selection-rule"
            assert float(r["re_total"]) == 0.0 and float(r["im_total"]) == 0.0
    d00 = next(r for r in rs if r["l"] == "0")
    ref = latsums.closed_d00_1in3(1.3, 0.8, 1.0)
    assert abs(complex(float(d00["re_total"]), float(d00["im_total"])) - ref) <= 1e-10 * abs(ref)


def test_dlm_eta_sweep_blocks(runner):
    res = runner.invoke(cli.main, ["dlm", "--case", "1in2", "--sigma", "2.1", "--kpar", "0.3", "--indices", "0,1,-1",
                                   "--eta-sweep", "1e-3:1e-1:logs10"])
    assert res.exit_code == 0, res.output
    rs = rows(res.output)
    etas = sorted({float(r["eta"]) for r in rs})
    assert len(etas) == 10 and len(rs) == 30
    totals = [complex(float(r["re_total"]), float(r["im_total"])) for r in rs if r["l"] == "0"]
    assert max(abs(t - totals[-1]) for t in totals) < 1e-12


def test_table1(runner):
    res = runner.invoke(cli.main, ["table1", "--format", "csv"])
    assert res.exit_code == 0, res.output
    rs = rows(res.output)
    assert {r["route"] for r in rs} == {"dual", "ewald", "dual-ewald"}
    for r in rs:
        assert float(r["abs_diff_re"]) <= 1e-12 and float(r["abs_diff_im"]) <= 1e-12
    diff = [r for r in rs if r["route"] == "dual-ewald"]
    assert max(float(r["abs_diff_re"]) + float(r["abs_diff_im"]) for r in diff) <= 8e-15


@pytest.mark.slow
def test_table1_stats(runner):
    res = runner.invoke(cli.main, ["table1", "--stats"])
    assert res.exit_code == 0, res.output
    assert "ratio" in res.output


def test_spectrum_band_edge(runner):
    alpha = repr(math.log(2) / math.sqrt(4 * math.pi))
    res = runner.invoke(cli.main, ["spectrum", "--k", repr(math.pi / 2), "--alpha", alpha])
    assert res.exit_code == 0, res.output
    assert abs(float(rows(res.output)[0]["z"])) < 1e-12


def test_spectrum_grid_monotone(runner):
    res = runner.invoke(cli.main, ["spectrum", "--k-grid", "0.5:2.5:5", "--alpha", "-0.5,-0.2,0.1", "--format", "json"])
    assert res.exit_code == 0, res.output
    recs = json.loads(res.output)
    for k in {r["k"] for r in recs}:
        zs = [r["z"] for r in sorted((r for r in recs if r["k"] == k), key=lambda r: r["alpha_tilde"])]
        assert all(a > b for a, b in zip(zs, zs[1:]))


def test_spectrum_empty_bracket(runner):
    res = runner.invoke(cli.main, ["spectrum", "--k", "1.0", "--alpha", "0.1", "--bracket", "0.5,-1"])
    assert res.exit_code != 0


def test_check_quick_subset(runner):
    res = runner.invoke(cli.main, ["check", "--criteria", "4,7"])
    assert res.exit_code == 0, res.output
    assert res.output.count("PASS") == 2


@pytest.mark.parametrize("text,value", [("pi/8", math.pi / 8), ("pi", math.pi), ("2pi/3", 2 * math.pi / 3),
                                        ("-pi/4", -math.pi / 4), ("0.25", 0.25), ("3*pi/2", 1.5 * math.pi)])
def test_parse_angle(text, value):
    assert cli.parse_angle(text) == pytest.approx(value, rel=1e-15)


@given(st.floats(-100, 100))
def test_parse_angle_literal(x):
    assert cli.parse_angle(repr(x)) == x


def test_parse_errors():
    with pytest.raises(ConfigError):
        cli.parse_angle("tau/2")
    with pytest.raises(ConfigError):
        cli.parse_range("1:2")
    with pytest.raises(ConfigError):
        cli.parse_range("-1:2:logs3")
    with pytest.raises(ConfigError):
        cli.parse_indices("1:5", 3)


def test_csv_uses_17_digits():
    text = cli.render([{"a": 0.1, "b": 1}], ("a", "b"), "csv")
    assert text.splitlines()[1] == "0.10000000000000001,1"
