import json

import pytest

from arnoldstab import cli, grid


def run_cli(*argv):
    return cli.main(list(argv))


BASE = ["--domain", "annulus", "--rin", "1.0", "--rout", "2.0", "--res", "16"]


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("gen", "--bogus-flag", "1")
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("not_a_key = 3\n")
    assert run_cli("--config", str(cfg), "gen", "--out", str(tmp_path / "o")) == 2


def test_gen_writes_domain_and_manifest(tmp_path):
    out = tmp_path / "gen"
    assert run_cli("gen", *BASE, "--out", str(out)) == 0
    fld = grid.read_field(out / "domain.sfld")
    assert fld.domain.n_components == 2
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "gen"
    assert manifest["seed"] == 20240801
    assert "domain.sfld" in manifest["outputs"]


def test_config_file_round(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("domain = annulus\nrin = 1.0\nrout = 2.0\nres = 16\n")
    out = tmp_path / "o"
    assert run_cli("--config", str(cfg), "gen", "--out", str(out)) == 0
    # flag overrides file
    out2 = tmp_path / "o2"
    assert run_cli("--config", str(cfg), "gen", "--res", "12", "--out", str(out2)) == 0
    a = grid.read_field(out / "domain.sfld")
    b = grid.read_field(out2 / "domain.sfld")
    assert a.domain.nx != b.domain.nx


def test_harmonic_outputs(tmp_path):
    out = tmp_path / "h"
    assert run_cli("harmonic", *BASE, "--out", str(out)) == 0
    rows = (out / "pq.csv").read_text().strip().splitlines()
    assert rows[0] == "i,j,p_ij,q_ij"
    i, j, p, q = rows[1].split(",")
    assert abs(float(p) * float(q) - 1.0) <= 1e-12


def test_stream_and_report(tmp_path):
    out = tmp_path / "s"
    assert run_cli("stream", *BASE, "--omega-const", "1.0", "--a", "0.5", "--out", str(out)) == 0
    diag = (out / "diag.csv").read_text().splitlines()
    assert float(diag[1].split(",")[0]) <= 1e-6
    assert run_cli("report", "--csv", str(out / "diag.csv"), "--out", str(out)) == 0
    svg = (out / "plot.svg").read_text()
    assert svg.startswith("<svg")


def test_spectra_criterion_csv(tmp_path):
    out = tmp_path / "spec"
    assert run_cli("spectra", *BASE, "--kappa", "1.0", "--out", str(out)) == 0
    header, row = (out / "criterion.csv").read_text().strip().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    assert abs(float(cols["lambda_Lambda_minus_1"])) <= 1e-8


def test_steady_subcommand(tmp_path):
    out = tmp_path / "st"
    assert run_cli("steady", *BASE, "--g", "linear:1.0", "--a", "1.0", "--out", str(out)) == 0
    header, row = (out / "steady.csv").read_text().strip().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    assert cols["certified"] == "1"


def test_probe_subcommand(tmp_path):
    out = tmp_path / "pr"
    code = run_cli(
        "probe", *BASE, "--kappa", "1.0", "--a", "1.0",
        "--samples", "10", "--out", str(out),
    )
    assert code == 0
    assert (out / "probe.csv").exists()
    assert (out / "supporting.csv").exists()


def test_simulate_subcommand(tmp_path):
    out = tmp_path / "sim"
    code = run_cli(
        "simulate", *BASE, "--kappa", "1.0", "--a", "1.0",
        "--turnovers", "0.05", "--perturb", "swap:0.005", "--out", str(out),
    )
    assert code == 0
    series = (out / "series.csv").read_text().splitlines()
    assert series[0].startswith("t,energy,kinetic,ec,dist_ref,hist_drift,circ_1")
    assert len(series) >= 3


def test_oracle_subcommand(capsys):
    assert run_cli("oracle", "--rin", "1.0", "--rout", "2.0", "--n", "512") == 0
    text = capsys.readouterr().out
    assert "p11" in text and "lambda_Y" in text


def test_solver_error_exit_3(tmp_path):
    # resonant kappa triggers a solver rejection
    out = tmp_path / "bad"
    from arnoldstab import harmonic, spectra

    dom = grid.build_annulus(1.0, 2.0, 16)
    lam = spectra.lambda_plain(harmonic.solve_basis(dom)).value
    code = run_cli(
        "steady", *BASE, "--g", "linear:%.12f" % lam, "--a", "1.0", "--out", str(out)
    )
    assert code == 3


def test_determinism_same_seed_same_bytes(tmp_path):
    outs = []
    for name in ("da", "db"):
        out = tmp_path / name
        assert run_cli(
            "simulate", *BASE, "--kappa", "1.0", "--a", "1.0", "--seed", "7",
            "--turnovers", "0.05", "--perturb", "swap:0.005", "--out", str(out),
        ) == 0
        outs.append((out / "series.csv").read_bytes())
    assert outs[0] == outs[1]


def test_verify_all_fast_subset(tmp_path):
    out = tmp_path / "verify"
    code = run_cli("verify-all", "--quick", "--criteria", "8,11", "--out", str(out))
    assert code == 0
    text = (out / "acceptance.csv").read_text()
    assert "criterion,title,passed" in text


def test_functional_subcommand(tmp_path):
    out = tmp_path / "fn"
    for which in ("E", "EC", "Dhat"):
        code = run_cli(
            "functional", *BASE, "--functional", which,
            "--omega-const", "0.5", "--a", "1.0", "--g", "linear:1.0",
            "--out", str(out),
        )
        assert code == 0
    rows = (out / "functional.csv").read_text().strip().splitlines()
    assert rows[0] == "functional,value,mu"
    assert len(rows) == 4
    dhat_mu = float(rows[3].split(",")[2])
    assert abs(dhat_mu) < 10.0


def test_mask_domain_via_cli(tmp_path):
    runs = ["24 1"] * 5 + ["9 1 6 0 9 1"] * 5 + ["24 1"] * 5
    mask = tmp_path / "dom.rle"
    mask.write_text("RLE 24 15\n" + "\n".join(runs) + "\n")
    out = tmp_path / "m"
    code = run_cli(
        "gen", "--domain", "mask", "--mask-file", str(mask), "--res", "8",
        "--out", str(out),
    )
    assert code == 0
    fld = grid.read_field(out / "domain.sfld")
    assert fld.domain.n_components == 2


def test_simulate_snapshots(tmp_path):
    out = tmp_path / "snap"
    code = run_cli(
        "simulate", *BASE, "--kappa", "1.0", "--a", "1.0",
        "--turnovers", "0.05", "--cadence", "2", "--snap-every", "2",
        "--out", str(out),
    )
    assert code == 0
    snaps = sorted(out.glob("omega_0*.sfld"))
    assert len(snaps) >= 2
    fld = grid.read_field(snaps[0])
    assert fld.domain.n_components == 2
