import csv
import math

import numpy as np
import pytest

from smoothscope.cli import main
from smoothscope.config import ConfigError, RunConfig, parse_config
from smoothscope.rules import Rule
from smoothscope.salsa import SmoothnessReport, run_salsa
from smoothscope.hierarchy import fixed_stencils
from smoothscope.kernels import KernelSpec
from smoothscope.tables import DataError, bucket_of, emit_report, ingest, write_dataset
from smoothscope.testbed import halton_points, get_function


# ----------------------------------------------------------------- ingest


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_ingest_small_file(tmp_path):
    X, f = ingest(write(tmp_path / "a.csv", "x,f\n0,1\n0.5,2\n1,3\n"))
    assert len(X) == 3 and X.dim == 1 and np.array_equal(f, [1, 2, 3])


def test_ingest_whitespace_and_comments(tmp_path):
    X, f = ingest(write(tmp_path / "a.txt", "# note\nx1 x2 f\n0 0 1\n# skip\n1 0.5 2\n"))
    assert X.dim == 2 and np.array_equal(f, [1, 2])


@pytest.mark.parametrize(
    "text,needle",
    [
        ("x,f\n0,1\n0.5,2\n0,3\n", "lines 2 and 4"),
        ("x,f\n0,1\n0.5,abc\n", "line 3, column 2"),
        ("x,f\n0,1\n0.5,nan\n", "non-finite"),
        ("x,f\n0,1\n0.5\n", "line 3"),
        ("x,f\n", "no data rows"),
        ("", "no header"),
    ],
)
def test_ingest_errors(tmp_path, text, needle):
    with pytest.raises(DataError, match=needle):
        ingest(write(tmp_path / "bad.csv", text))


def test_synth_ingest_round_trip(tmp_path):
    fn = get_function("composite_2d")
    P = halton_points(200000, fn.domain)
    vals = fn(P.coords)
    path = write_dataset(tmp_path / "h.csv", P, vals)
    X, f = ingest(path)
    assert np.array_equal(X.coords, P.coords) and np.array_equal(f, vals)


# ----------------------------------------------------------------- config


def test_config_parsing():
    cfg = parse_config("tau = 3\nmethod = stencil\nfunction = piecewise_1d\nlengthscale_rule = fixed(0.1)\ndrop_first = true\n")
    assert cfg.tau == 3.0 and cfg.method == "stencil" and cfg.lengthscale_rule == Rule("fixed", 0.1)
    assert cfg.drop_first == 1
    cfg.validate(dim=1)


@pytest.mark.parametrize(
    "text,field",
    [
        ("bogus = 1", "bogus"),
        ("tau = 3\ntau = 4", "tau"),
        ("levels = x", "levels"),
        ("lengthscale_rule = magic", "lengthscale_rule"),
        ("floor = -1", "floor"),
        ("drop_flagged = maybe", "drop_flagged"),
        ("tau = inf", "tau"),
    ],
)
def test_config_parse_errors_name_field(text, field):
    with pytest.raises(ConfigError, match=field):
        parse_config(text)


@pytest.mark.parametrize(
    "cfg,field",
    [
        (RunConfig(tau=0.4), "tau"),
        (RunConfig(tau=3, levels=2), "levels"),
        (RunConfig(tau=3, neighbors=5, levels=8), "neighbors"),
        (RunConfig(tau=3, method="stencil"), "function"),
        (RunConfig(tau=3, method="other"), "method"),
        (RunConfig(tau=None), "tau"),
        (RunConfig(tau=3, centers="some"), "centers"),
        (RunConfig(tau=3, grid_min=5, grid_max=5), "grid_min"),
    ],
)
def test_config_validation_names_field(cfg, field):
    with pytest.raises(ConfigError, match=field):
        cfg.validate(dim=1)


# ----------------------------------------------------------------- emit


def one_report():
    H = fixed_stencils(-0.4, 0.02, 1, 5)
    return run_salsa(KernelSpec(3.0, 1, 0.04), H, get_function("piecewise_1d")(H.master.coords), center=[-0.4])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_emit_single_report(tmp_path):
    failed = SmoothnessReport.failed([0.1], 3.0, "increment", "no usable pairs")
    out = emit_report([one_report(), failed], tmp_path / "o", parameters={"tau": "3"}, raw=True)
    rows = read_csv(out / "smoothness.csv")
    assert rows[0][:6] == ["x1", "beta_l2", "beta_native", "r2_l2", "r2_native", "status"]
    assert len(rows) == 3 and rows[1][5] == "ok"
    assert rows[2][5] == "degenerate" and rows[2][1] == rows[2][2] == ""
    raw = (out / "raw" / "center_00000.csv").read_text().splitlines()
    assert raw[1] == "m,h,c2,cN,dN,jitter_coarse,jitter_fine" and len(raw) == 2 + 4
    summary = (out / "summary.txt").read_text()
    assert "tau = 3" in summary and "degenerate = 1" in summary


def test_emit_rejects_empty(tmp_path):
    with pytest.raises(DataError):
        emit_report([], tmp_path)


def test_buckets():
    assert [bucket_of(b, 3.0) for b in (0.5, 1.5, 2.0, 2.9, math.nan)] == [
        "jump", "corner", "intermediate", "smooth", "degenerate"
    ]


# ----------------------------------------------------------------- command line


def stencil_config(tmp_path, **extra):
    lines = {
        "tau": "3", "method": "stencil", "function": "piecewise_1d", "levels": "6",
        "stencil_radius_rule": "fixed(0.02)", "lengthscale_rule": "stencil_radius_x2", "workers": "1",
    }
    lines.update(extra)
    return write(tmp_path / "run.cfg", "".join(f"{k} = {v}\n" for k, v in lines.items()))


def test_synth_then_analyze(tmp_path, capsys):
    data = tmp_path / "pw.csv"
    assert main(["synth", "--function", "piecewise_1d", "--sampler", "grid", "--n", "50", "--out", str(data)]) == 0
    assert main(["analyze", "--input", str(data), "--config", str(stencil_config(tmp_path)), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "smoothness.csv")
    assert len(rows) == 51
    assert "50 centers" in capsys.readouterr().out


def test_analyze_subsample_with_center_grid(tmp_path):
    data = tmp_path / "h.csv"
    assert main(["synth", "--function", "step_1d", "--sampler", "halton", "--n", "2000", "--out", str(data)]) == 0
    cfg = write(tmp_path / "s.cfg", "tau = 3\nlevels = 5\nneighbors = 100\nlengthscale_rule = neighbor_diam_x2\ncenters = grid:5\nraw_dump = yes\n")
    assert main(["analyze", "--input", str(data), "--config", str(cfg), "--out", str(tmp_path / "o"), "--workers", "1"]) == 0
    assert len(read_csv(tmp_path / "o" / "smoothness.csv")) == 6
    assert len(list((tmp_path / "o" / "raw").iterdir())) == 5


def test_synth_bunny_skips_center(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["synth", "--function", "bunny_3d", "--sampler", "grid", "--n", "125", "--out", str(out)]) == 0
    X, f = ingest(out)
    assert len(X) == 125 and np.all(np.abs(f) <= 4)


def test_rates_command(tmp_path, capsys):
    assert main(["rates", "--experiment", "abs", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "abs_summary.txt").read_text()
    assert "L2 exponent" in text and "inverse check" in text
    assert (tmp_path / "abs_rates.csv").exists()


def test_exit_codes(tmp_path, capsys):
    data = write(tmp_path / "d.csv", "x,f\n0,1\n0.5,2\n1,3\n")
    bad_cfg = write(tmp_path / "bad.cfg", "wrong = 1\n")
    assert main(["analyze", "--input", str(data), "--config", str(bad_cfg), "--out", str(tmp_path / "o")]) == 2
    assert main(["rates", "--experiment", "nope", "--out", str(tmp_path)]) == 2
    dup = write(tmp_path / "dup.csv", "x,f\n0,1\n0,2\n")
    assert main(["analyze", "--input", str(dup), "--config", str(stencil_config(tmp_path)), "--out", str(tmp_path / "o")]) == 3
    cfg = write(tmp_path / "k.cfg", "tau = 3\nneighbors = 10\nlevels = 3\n")
    assert main(["analyze", "--input", str(data), "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    wrong_dim = stencil_config(tmp_path, function="composite_2d")
    assert main(["analyze", "--input", str(data), "--config", str(wrong_dim), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_analyze_is_byte_stable(tmp_path):
    data = tmp_path / "pw.csv"
    main(["synth", "--function", "piecewise_1d", "--sampler", "halton", "--n", "40", "--out", str(data)])
    cfg = stencil_config(tmp_path, workers="2")
    main(["analyze", "--input", str(data), "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["analyze", "--input", str(data), "--config", str(cfg), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "smoothness.csv").read_bytes() == (tmp_path / "b" / "smoothness.csv").read_bytes()
