import csv
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from conftest import ii2_model, vi3_model
from twofold.cli import EXIT_CONFIG, EXIT_OK, main
from twofold.config import dump_model, load_config, load_model_text, parse_number, parse_text
from twofold.errors import ConfigError
from twofold.svg import Figure

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
MODEL = (CONFIGS / "vi3.model").read_text()
COEFFS = ("delta", "alpha", "beta", "omega", "zeta_plus", "zeta_minus", "eta_plus", "eta_minus",
          "chi_plus", "chi_minus")


def write(tmp_path, text, name="run.cfg", model=True):
    if model:
        (tmp_path / "vi3.model").write_text(MODEL)
    p = tmp_path / name
    p.write_text(text)
    return p


def csv_body(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# twofold ")
    return list(csv.reader(line for line in lines if not line.startswith("#")))


# -- grammar ------------------------------------------------------------------

def test_numbers_and_fractions():
    assert parse_number("1/3") == pytest.approx(1 / 3)
    assert parse_number("-2.5e-3") == -2.5e-3
    for bad in ("1/0", "abc", "inf", "nan"):
        with pytest.raises(ConfigError):
            parse_number(bad)


def test_lists_ranges_and_comments():
    e = parse_text("a = [1, 2/4, x]  # note\n\n# skip\nb = 0:1:5\nc = word\n")
    assert e["a"].value == [1.0, 0.5, "x"]
    assert e["b"].value == pytest.approx([0, 0.25, 0.5, 0.75, 1.0])
    assert e["c"].value == "word" and e["c"].line == 5


@pytest.mark.parametrize("text,line", [
    ("a = 1\nb 2\n", 2),
    ("a = 1\na = 2\n", 2),
    ("a = [1, 2\n", 1),
    ("\n\nr = 0:1:0\n", 3),
    ("a = []\n", 1),
    ("a = [1,,2]\n", 1),
    ("9a = 1\n", 1),
    ("a =\n", 1),
    ("a = 0:1:x\n", 1),
])
def test_grammar_errors_report_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_text(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@pytest.mark.parametrize("model", [ii2_model, vi3_model], ids=["ii2", "vi3"])
def test_model_round_trip_is_exact(model):
    m = model()
    again = load_model_text(dump_model(m))
    for k in COEFFS:
        assert getattr(again, k) == getattr(m, k)
    assert dump_model(again) == dump_model(m)


@settings(max_examples=30)
@given(st.floats(-5, 5, allow_subnormal=False), st.floats(-5, 5, allow_subnormal=False))
def test_round_trip_random_coefficients(zp, em):
    text = (f"xplus.f1.1 = 1\nxplus.f1.x = {zp!r}\nxplus.f2.x = 1\n"
            f"xminus.f1.1 = -1\nxminus.f2.u = -2\nxminus.f2.u^2 = {em!r}\n")
    m = load_model_text(text)
    assert m.zeta_plus == zp and m.eta_minus == em
    again = load_model_text(dump_model(m))
    assert all(getattr(again, k) == getattr(m, k) for k in COEFFS)


def test_repeated_monomial_rejected():
    with pytest.raises(ConfigError) as info:
        load_model_text("xplus.f1.1 = 1\nxplus.f1.x*x = 1\nxplus.f1.x^2 = 2\n")
    assert info.value.line == 3


def test_unknown_key(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, "model = vi3.model\nfoo = 1\n"))
    assert info.value.line == 2


def test_eps_and_r2_exclusive(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "model = vi3.model\neps = 0.01\nr2 = 0.1\n"))
    cfg = load_config(write(tmp_path, "model = vi3.model\nr2 = 0.1\nmu2 = [-1, 1]\n"))
    assert cfg.eps == pytest.approx(0.01)
    assert cfg.mu == pytest.approx((-0.1, 0.1))


def test_mu2_requires_scale(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "model = vi3.model\nmu2 = 0.1\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "model = vi3.model\nr2 = 0.1\nmu = 0\nmu2 = 0\n"))


def test_phi_selection(tmp_path):
    cfg = load_config(write(tmp_path, "model = vi3.model\nphi.coeffs = [3/2, -1/2]\n"))
    assert cfg.phi.coefficients == (1.5, -0.5)
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "model = vi3.model\nphi.kind = quintic\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "model = vi3.model\nphi.coeffs = [2, 1]\n"))


def test_hash_covers_model_file(tmp_path):
    p = write(tmp_path, "model = vi3.model\n")
    h1 = load_config(p).source_hash
    (tmp_path / "vi3.model").write_text(MODEL + "# edited\n")
    assert load_config(p).source_hash != h1


def test_missing_model_file(tmp_path):
    p = write(tmp_path, "model = nothere.model\n", model=False)
    with pytest.raises(ConfigError):
        load_config(p)


# -- commands -----------------------------------------------------------------

def test_classify_command(tmp_path, capsys):
    cfg = write(tmp_path, "model = vi3.model\nmu = 0.01\n")
    assert main(["classify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert "VI3" in capsys.readouterr().out
    rows = dict(csv_body(tmp_path / "o" / "classify.csv")[1:])
    assert rows["kind"] == "VI3" and rows["singular_canard"] == "vrai"
    assert rows["limit_cycles"] == "regularized-only"


def test_degenerate_model_exit_code(tmp_path, capsys):
    shutil.copy(CONFIGS / "vv1.model", tmp_path / "vv1.model")
    cfg = tmp_path / "d.cfg"
    cfg.write_text("model = vv1.model\n")
    assert main(["classify", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "twofold:" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path):
    cfg = write(tmp_path, "model = vi3.model\nbad line\n")
    assert main(["classify", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["classify", "--config", str(tmp_path / "absent.cfg")]) == EXIT_CONFIG
    assert main(["classify", "--config", str(cfg), "--threads", "0"]) == EXIT_CONFIG


def test_analyze_command(tmp_path, capsys):
    cfg = write(tmp_path, "model = vi3.model\nphi.kind = [cubic, septic]\n")
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    assert "saddle-node" in capsys.readouterr().err
    rows = {(p, q): v for p, q, v in csv_body(tmp_path / "analyze.csv")[1:]}
    assert float(rows["cubic", "a2"]) == pytest.approx(-5 / 64)
    assert float(rows["cubic", "mu2_c"]) == pytest.approx(-0.0780638655, abs=1e-9)
    assert float(rows["septic", "mu2_H"]) == pytest.approx(-1 / 8)
    assert rows["cubic", "regime"] == "center"


def test_analyze_needs_phi(tmp_path):
    cfg = write(tmp_path, "model = vi3.model\n")
    assert main(["analyze", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_simulate_filippov_and_svg(tmp_path):
    cfg = write(tmp_path, (CONFIGS / "vi3_filippov.cfg").read_text())
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    rows = csv_body(tmp_path / "trajectory.csv")
    assert rows[0] == ["t", "x", "y", "mode", "event"]
    assert float(rows[-1][1]) > 0.2
    root = ET.parse(tmp_path / "phase.svg").getroot()
    assert root.tag.endswith("svg") and root.findall(".//{http://www.w3.org/2000/svg}polyline")


def test_simulate_sweep_is_deterministic_across_threads(tmp_path):
    text = ("model = vi3.model\nphi.kind = cubic\nr2 = 0.1\nmu2 = -0.009:-0.007:3\n"
            "x0 = [-0.2, 0.001]\nt_span = [0, 5]\n")
    cfg = write(tmp_path, text)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"),
                 "--threads", "3"]) == EXIT_OK
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "trajectory_000.csv" in names and "trajectory_002.csv" in names
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_simulate_rejects_empty_time_span(tmp_path):
    cfg = write(tmp_path, "model = vi3.model\nmu = 0\nx0 = [-0.1, 0]\nt_span = [0, 0]\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_continue_command(tmp_path):
    cfg = write(tmp_path, "model = vi3.model\nphi.kind = cubic\nr2 = 0.1\n"
                          "branch.mu2_max = 0.05\n")
    assert main(["continue", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    text = (tmp_path / "branch_cubic.csv").read_text()
    assert "explosion mu2_lo=" in text
    rows = csv_body(tmp_path / "branch_cubic.csv")
    assert rows[0] == ["mu2", "amp_x", "amp_yhat", "period", "floquet", "stable", "fold_flag"]
    amps = [float(r[1]) for r in rows[1:]]
    assert min(amps) < 0.1 and max(amps) > 1.0
    ET.parse(tmp_path / "amplitude.svg")


def test_continue_needs_scale(tmp_path):
    cfg = write(tmp_path, "model = vi3.model\nphi.kind = cubic\n")
    assert main(["continue", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "twofold.cli", "--version"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.startswith("twofold ")


def test_svg_is_well_formed_and_deterministic():
    fig = Figure(title="a < b & c", xlabel="x", ylabel="y")
    fig.add([0, 1, 2], [0, 1, 4], "sq")
    fig.mark(1, 1, "pt")
    fig.band(0.5, 0.6, "window")
    svg = fig.to_svg()
    assert svg == fig.to_svg()
    root = ET.fromstring(svg.split("\n", 1)[1])
    assert root.attrib["version"] == "1.1"
