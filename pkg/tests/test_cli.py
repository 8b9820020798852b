import cmath
import json

import pytest

from conftest import saddle_phi
from stokesab.cli import main
from stokesab.fixtures import path as fixture_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def pipeline(tmp_path, capsys):
    assert run(capsys, "stokes", "--out", tmp_path / "g", "--plot")[0] == 0
    spectral = tmp_path / "g" / "spectral.json"
    assert run(capsys, "random-system", spectral, "--out", tmp_path / "sys.json", "--seed", 3)[0] == 0
    return tmp_path, spectral


def test_stokes_writes_graphs_and_plot(pipeline):
    tmp, _ = pipeline
    for name in ("stokes.json", "spectral.json", "stokes.svg"):
        assert (tmp / "g" / name).exists()
    assert (tmp / "g" / "stokes.svg").read_text().startswith("<svg")


def test_full_pipeline_and_validate(pipeline, capsys):
    tmp, spectral = pipeline
    assert run(capsys, "nonab", tmp / "sys.json", "--out", tmp / "rep.json")[0] == 0
    assert run(capsys, "ab", tmp / "rep.json", spectral, "--out", tmp / "back.json")[0] == 0
    for name in ("g/stokes.json", "g/spectral.json", "sys.json", "rep.json", "back.json"):
        assert run(capsys, "validate", tmp / name)[0] == 0, name


def test_corrupted_constants_fail_validation(pipeline, capsys):
    tmp, _ = pipeline
    data = json.loads((tmp / "sys.json").read_text())
    data["m"][0]["re"] *= -1
    data["m"][0]["im"] *= -1
    (tmp / "bad.json").write_text(json.dumps(data))
    assert run(capsys, "validate", tmp / "bad.json")[0] == 1
    assert run(capsys, "nonab", tmp / "bad.json")[0] == 1


def test_corrupted_weight_shows_up_as_branch_monodromy(pipeline, capsys):
    tmp, _ = pipeline
    data = json.loads((tmp / "sys.json").read_text())
    data["t"][0]["re"] += 0.5
    (tmp / "bad.json").write_text(json.dumps(data))
    code, _, err = run(capsys, "nonab", tmp / "bad.json")
    assert code == 6 and "BranchMonodromyNontrivial" in err


def test_roundtrip_default_and_determinism(capsys):
    a = run(capsys, "roundtrip", "--seed", 5)
    b = run(capsys, "roundtrip", "--seed", 5)
    assert a[0] == 0 and a == b


def test_roundtrip_on_four_point_fixture(capsys):
    assert run(capsys, "roundtrip", "--phi", fixture_path("phi_0_4.json"))[0] == 0


def test_broken_ramification_exits_six(capsys):
    assert run(capsys, "roundtrip", "--broken-ramification")[0] == 6


def test_hypersurface_residues_exit_two(capsys):
    assert run(capsys, "stokes", "--residues", "4", "1", "1")[0] == 2


def test_negative_residue_exits_two(capsys):
    assert run(capsys, "roundtrip", "--residues", "-0.3,0", "0.5,0.1", "0.4,0.2")[0] == 2


def test_saddle_exits_three(capsys, saddle_angle, tmp_path):
    for psi, want in ((saddle_angle, 3), (saddle_angle + 1e-3, 0)):
        g = 2 * cmath.exp(1j * psi)
        code, _, _ = run(capsys, "stokes", "--residues", "0.3", "0.3", f"{g.real!r},{g.imag!r}", "--out", tmp_path)
        assert code == want
    assert saddle_phi(saddle_angle) is not None


def test_zero_budget_is_inconclusive(capsys, tmp_path):
    assert run(capsys, "stokes", "--trace", "max_arclength_w=0", "--out", tmp_path)[0] == 3


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    ["roundtrip", "--residues", "a,b", "1", "2"],
    ["roundtrip", "--trace", "no_such_key=1"],
    ["roundtrip", "--seed", "x"],
])
def test_bad_arguments_exit_one(capsys, argv):
    assert run(capsys, *argv)[0] == 1


def test_malformed_json_exits_one(capsys, tmp_path):
    (tmp_path / "x.json").write_text("[1, 2")
    assert run(capsys, "validate", tmp_path / "x.json")[0] == 1


def test_config_file(capsys, tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps({"seed": 9, "tol": 1e-7}))
    a = run(capsys, "roundtrip", "--config", tmp_path / "cfg.json")
    b = run(capsys, "roundtrip", "--seed", 9, "--tol", "1e-7")
    assert a[0] == 0 and a == b
    (tmp_path / "bad.json").write_text(json.dumps({"sed": 9}))
    assert run(capsys, "roundtrip", "--config", tmp_path / "bad.json")[0] == 1
