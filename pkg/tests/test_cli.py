"""End-to-end tests of the command-line interface.

Everything runs in process through cli.main(argv) so exit codes and output
can be checked without spawning subprocesses.
"""

import json
import math

import numpy as np
import pytest

from boundstates.cli import main
from boundstates.potentials import (
    DipoleBump,
    GridFunction,
    SquareBump,
    Zero,
    potential_from_json,
    potential_to_json,
)


# --- fixtures: input files shared across tests -----------------------------

@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")

    def dump(name, doc):
        path = d / name
        path.write_text(json.dumps(doc))
        return str(path)

    out = {
        "square": dump("square.json", potential_to_json(SquareBump(0.5))),
        "zero": dump("zero.json", potential_to_json(Zero())),
        "dipole": dump("dipole.json", potential_to_json(DipoleBump(1.1))),
        "targets": dump("targets.json", [1e-2, 1e-3]),
        "bad_targets": dump("bad_targets.json", [1e-3, 1e-2]),
        "empty_targets": dump("empty_targets.json", []),
        "garbage": str(d / "garbage.json"),
        "dir": d,
    }
    (d / "garbage.json").write_text("{this is not json")

    x = np.linspace(-1.0, 1.0, 13)
    w = 0.2 * (1.0 - x ** 2)
    w[0] = w[-1] = 0.0
    out["hump"] = dump("hump.json", GridFunction(x, w, "pl").to_json())

    w_bad = w.copy()
    w_bad[0] = 0.1
    out["hump_bad"] = dump("hump_bad.json",
                           GridFunction(x, w_bad, "pl").to_json())
    return out


@pytest.fixture(scope="module")
def stored_decomposition(files):
    """A decomposition JSON produced by the decompose subcommand itself."""
    path = str(files["dir"] / "square_dec.json")
    rc = main(["decompose", files["square"], "--domain", "whole:40",
               "--out", path])
    assert rc == 0
    return path


def run(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


# --- eigs ------------------------------------------------------------------

def test_eigs_square_bump_single_level(files, capsys):
    rc, out, _ = run(capsys, ["eigs", files["square"]])
    assert rc == 0
    doc = json.loads(out)
    assert doc["schema"] == 1
    assert len(doc["entries"]) == 1
    entry = doc["entries"][0]
    assert entry["sign"] == "+"
    # square-well secular equation at g = 0.5
    assert entry["E"] == pytest.approx(0.1539607963518062, rel=1e-6)


def test_eigs_zero_potential_is_empty(files, capsys):
    rc, out, _ = run(capsys, ["eigs", files["zero"], "--domain=-30:30"])
    assert rc == 0
    assert json.loads(out)["entries"] == []


def test_eigs_explicit_domain_and_neumann(files, capsys):
    rc, out, _ = run(capsys, ["eigs", files["square"],
                              "--domain=-60:60", "--bc", "neumann"])
    assert rc == 0
    doc = json.loads(out)
    assert doc["bc"] == "neumann"
    assert doc["domain"] == [-60.0, 60.0]
    assert len(doc["entries"]) == 1


def test_missing_file_is_input_error(files, capsys):
    rc, _, err = run(capsys, ["eigs", str(files["dir"] / "nope.json")])
    assert rc == 2
    assert err


def test_corrupt_json_is_input_error(files, capsys):
    rc, _, _ = run(capsys, ["eigs", files["garbage"]])
    assert rc == 2


def test_bad_domain_string_is_input_error(files, capsys):
    rc, _, err = run(capsys, ["eigs", files["square"], "--domain", "abc"])
    assert rc == 2
    assert "LO:HI" in err


# --- decompose -------------------------------------------------------------

def test_decompose_verifies_and_writes(files, stored_decomposition, capsys):
    # the fixture already ran the command; run again to inspect stdout
    rc, out, _ = run(capsys, ["decompose", files["square"],
                              "--domain", "whole:40",
                              "--out", str(files["dir"] / "dec2.json")])
    assert rc == 0
    doc = json.loads(out)
    assert doc["schema"] == 1
    assert doc["verification"]["ok"]
    assert "decomposition" not in doc  # it went to --out
    stored = json.loads((files["dir"] / "dec2.json").read_text())
    assert stored["schema"] == 1
    assert stored["partition"]


def test_decompose_inlines_without_out(files, capsys):
    rc, out, _ = run(capsys, ["decompose", files["zero"],
                              "--domain", "whole:8"])
    assert rc == 0
    doc = json.loads(out)
    assert doc["verification"]["ok"]
    assert doc["decomposition"]["partition"]


def test_decompose_replay_round_trip(files, stored_decomposition, capsys):
    rc, out, _ = run(capsys, ["decompose", files["square"],
                              "--replay", stored_decomposition])
    assert rc == 0
    assert json.loads(out)["verification"]["ok"]


def test_decompose_tampered_replay_fails(files, stored_decomposition, capsys):
    doc = json.loads(open(stored_decomposition).read())
    doc["W"]["values"] = [100.0 * v for v in doc["W"]["values"]]
    tampered = files["dir"] / "tampered.json"
    tampered.write_text(json.dumps(doc))
    rc, out, err = run(capsys, ["decompose", files["square"],
                                "--replay", str(tampered)])
    assert rc == 4
    assert not json.loads(out)["verification"]["ok"]
    assert "interval" in err or "residual" in err


def test_decompose_requires_domain_or_replay(files, capsys):
    rc, _, err = run(capsys, ["decompose", files["square"]])
    assert rc == 2
    assert "--domain" in err


# --- ilt -------------------------------------------------------------------

def test_ilt_variant_a_reports_ratio(files, capsys):
    rc, out, _ = run(capsys, ["ilt", files["square"],
                              "--domain=-60:60"])
    assert rc == 0
    doc = json.loads(out)
    assert doc["variant"] == "a"
    assert doc["lhs"] == pytest.approx(1.0, rel=1e-12)
    assert doc["ratio"] > 1.0


def test_ilt_indefinite_potential_rejected(files, capsys):
    rc, _, err = run(capsys, ["ilt", files["dipole"]])
    assert rc == 2
    assert "nonpositive" in err


def test_ilt_variant_b_reports(files, capsys):
    rc, out, _ = run(capsys, ["ilt", files["square"], "--variant", "b",
                              "--E0", "1.0", "--domain=-60:60"])
    assert rc == 0
    doc = json.loads(out)
    assert doc["variant"] == "b"
    assert doc["E0"] == 1.0
    assert doc["lhs"] > 0 and doc["rhs"] > 0


def test_ilt_ceiling_violation_is_input_error(files, capsys):
    # E1 of the square bump is ~0.154, far above this ceiling
    rc, _, err = run(capsys, ["ilt", files["square"], "--variant", "b",
                              "--E0", "1e-4", "--domain=-60:60"])
    assert rc == 2
    assert "ceiling" in err


# --- sparse ----------------------------------------------------------------

def test_sparse_build_with_out_file(files, capsys):
    pot_path = files["dir"] / "built.json"
    rc, out, _ = run(capsys, ["sparse", files["targets"],
                              "--out", str(pot_path)])
    assert rc == 0
    doc = json.loads(out)
    assert doc["verification"]["ok"]
    assert doc["verification"]["count"] == 2
    V = potential_from_json(json.loads(pot_path.read_text()))
    assert V.support() is not None


def test_sparse_empty_targets_build(files, capsys):
    rc, out, _ = run(capsys, ["sparse", files["empty_targets"]])
    assert rc == 0
    doc = json.loads(out)
    assert doc["verification"]["expected_count"] == 0
    assert doc["potential"]["bumps"] == []


def test_sparse_undecreasing_targets_rejected(files, capsys):
    rc, _, err = run(capsys, ["sparse", files["bad_targets"]])
    assert rc == 2
    assert "nonincreasing" in err


# --- scatter ---------------------------------------------------------------

def test_scatter_writes_sweep_and_residual(files, capsys):
    csv_path = files["dir"] / "sweep.csv"
    rc, out, _ = run(capsys, ["scatter", files["hump"],
                              "--csv", str(csv_path),
                              "--kmax", "4", "--nk", "24"])
    assert rc == 0
    doc = json.loads(out)
    assert doc["schema"] == 1
    assert math.isfinite(doc["residual"])
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "k,re_r,im_r,abs_r2,log_flux"
    assert len(lines) == 1 + 24
    for line in lines[1:]:
        k, re_r, im_r, r2, logf = map(float, line.split(","))
        assert 0.0 < k <= 4.0
        assert 0.0 <= r2 < 1.0
        assert re_r ** 2 + im_r ** 2 == pytest.approx(r2, rel=1e-12)
        assert logf == pytest.approx(math.log(1.0 - r2), rel=1e-10)


def test_scatter_rejects_nonvanishing_endpoints(files, capsys):
    rc, _, err = run(capsys, ["scatter", files["hump_bad"],
                              "--csv", str(files["dir"] / "x.csv")])
    assert rc == 2
    assert "vanish" in err


# --- prufer ----------------------------------------------------------------

def test_prufer_scan_csv(files, stored_decomposition, capsys):
    rc, out, _ = run(capsys, ["prufer", stored_decomposition,
                              "--kgrid", "0.5,2.0"])
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "n,k,increment,err,bound"
    rows = [line.split(",") for line in lines[1:]]
    # 7 intervals for the stored square-bump decomposition, 2 wavenumbers
    assert len(rows) == 14
    for n, k, inc, err_v, bound in rows:
        assert abs(float(err_v)) <= float(bound) + 1e-9


def test_prufer_nonpositive_k_rejected(files, stored_decomposition, capsys):
    rc, _, err = run(capsys, ["prufer", stored_decomposition,
                              "--kgrid", "0.5,-1.0"])
    assert rc == 2
    assert "positive" in err


def test_prufer_requires_kgrid(files, stored_decomposition, capsys):
    rc, _, err = run(capsys, ["prufer", stored_decomposition])
    assert rc == 2
    assert "kgrid" in err


# --- determinism, config, seed ---------------------------------------------

def test_output_is_byte_identical_across_runs(files, capsys):
    _, out1, _ = run(capsys, ["eigs", files["square"], "--domain=-60:60"])
    _, out2, _ = run(capsys, ["eigs", files["square"], "--domain=-60:60"])
    assert out1 == out2

    csv_path_1 = files["dir"] / "det1.csv"
    csv_path_2 = files["dir"] / "det2.csv"
    _, res1, _ = run(capsys, ["scatter", files["hump"], "--csv",
                              str(csv_path_1), "--kmax", "3", "--nk", "16"])
    _, res2, _ = run(capsys, ["scatter", files["hump"], "--csv",
                              str(csv_path_2), "--kmax", "3", "--nk", "16"])
    assert res1 == res2
    assert csv_path_1.read_bytes() == csv_path_2.read_bytes()


def test_config_file_supplies_defaults(files, capsys):
    cfg = files["dir"] / "cfg.json"
    cfg.write_text(json.dumps({"domain": "-60:60", "floor": 1e-6}))
    _, out_cfg, _ = run(capsys, ["--config", str(cfg),
                                 "eigs", files["square"]])
    _, out_flag, _ = run(capsys, ["eigs", files["square"],
                                  "--domain=-60:60", "--floor", "1e-6"])
    assert out_cfg == out_flag


def test_explicit_flag_beats_config(files, capsys):
    cfg = files["dir"] / "cfg2.json"
    cfg.write_text(json.dumps({"domain": "-7:7"}))
    _, out, _ = run(capsys, ["--config", str(cfg), "eigs", files["square"],
                             "--domain=-60:60"])
    assert json.loads(out)["domain"] == [-60.0, 60.0]


def test_config_must_be_object(files, capsys):
    cfg = files["dir"] / "cfg3.json"
    cfg.write_text("[1, 2]")
    rc, _, err = run(capsys, ["--config", str(cfg), "eigs", files["square"]])
    assert rc == 2
    assert "object" in err


def test_seed_only_accepts_none(files):
    assert main(["--seed", "none", "eigs", files["zero"],
                 "--domain=-8:8"]) == 0
    with pytest.raises(SystemExit):
        main(["--seed", "7", "eigs", files["zero"]])
