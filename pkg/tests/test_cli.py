"""Experiment runner and command-line interface.

CSV outputs are parsed back and checked against closed forms (cycle tree
counts, torus entropy limits, exact covering radii), and reruns are compared
byte for byte.
"""

import contextlib
import io
import math

import numpy as np
import pytest

from groupforests import FiniteQuotient, GroupFamily, cli, runner
from groupforests.runner import (
    ExperimentConfig,
    _component_window_values,
    _covering_radius,
    parse_family,
    parse_moduli,
    resolve_config,
)

Z = GroupFamily.free_abelian(1)


def run_cli(args):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli.main(args)
    return code, buf.getvalue()


def parse_csv(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


def column(text, name):
    header, rows = parse_csv(text)
    idx = header.index(name)
    return [row[idx] for row in rows]


class TestConfigParsing:
    def test_family_specs(self):
        assert parse_family("free-abelian:2").kind == "free-abelian"
        assert parse_family("free_abelian:3").rank == 3
        assert parse_family("free:2").kind == "free"
        assert parse_family("heisenberg").kind == "heisenberg"
        with pytest.raises(ValueError):
            parse_family("free-abelian")
        with pytest.raises(ValueError):
            parse_family("dihedral:4")
        with pytest.raises(ValueError):
            parse_family("free:x")

    def test_moduli_specs(self):
        assert parse_moduli("4,4;8,8") == [(4, 4), (8, 8)]
        assert parse_moduli("3;5") == [(3,), (5,)]
        assert parse_moduli("4x4") == [(4, 4)]
        with pytest.raises(ValueError):
            parse_moduli(" ; ")

    def test_resolve_defaults_per_operation(self):
        cfg = resolve_config("green", family="free:2")
        assert cfg.K == 60 and cfg.radius == 2
        cfg = resolve_config("wsf-marginals", family="free-abelian:1", moduli="6")
        assert cfg.samples == 2000 and cfg.radius == 1

    def test_rejects_unbalanced_f(self):
        from groupforests import NotWellBalancedError

        with pytest.raises(NotWellBalancedError):
            resolve_config("tree-entropy", family="free-abelian:1", f="e 2\na -2")

    def test_rejects_nonmonotone_chain(self):
        with pytest.raises(ValueError):
            resolve_config("identity", family="free-abelian:1", moduli="8;4")

    def test_requires_quotients_for_chain_operations(self):
        with pytest.raises(ValueError):
            resolve_config("identity", family="free-abelian:1")

    def test_rejects_unknown_operation(self):
        with pytest.raises(ValueError):
            resolve_config("plot", family="free-abelian:1")

    def test_caps_flow_into_config(self):
        cfg = resolve_config(
            "window-density", family="free-abelian:1", moduli="4", max_enumerate=7, probes=3
        )
        assert cfg.cap("max_enumerate") == 7
        assert cfg.cap("probes") == 3
        assert cfg.cap("max_dense") == 4096


class TestIdentitySuite:
    def test_cycle_chain_tau_column(self):
        code, out = run_cli(
            ["identity", "--family", "free-abelian:1", "--moduli", "3;4;5;6;7;8;9;10;11;12"]
        )
        assert code == 0
        taus = column(out, "tau")
        orders = column(out, "component_order")
        assert taus == [str(m) for m in range(3, 13)]
        assert orders == taus

    def test_torus_chain_monotone_to_limit(self):
        code, out = run_cli(
            ["identity", "--family", "free-abelian:2", "--moduli", "4,4;8,8;12,12;16,16"]
        )
        assert code == 0
        vals = [float(v) for v in column(out, "log_tau_per_site")]
        assert vals == sorted(vals)
        assert abs(vals[-1] - 1.16624) < 0.05
        fk = [float(v) for v in column(out, "fk_eigen_kappa0")]
        n_sizes = [int(v) for v in column(out, "N")]
        for v, f_val, n in zip(vals, fk, n_sizes):
            assert abs(f_val - (v + math.log(n) / n)) < 1e-9

    def test_mismatch_exits_nonzero(self, monkeypatch, capsys):
        monkeypatch.setattr(runner, "spanning_tree_count", lambda lap, base=0: 999)
        code, _ = run_cli(["identity", "--family", "free-abelian:1", "--moduli", "3"])
        assert code == 1
        err = capsys.readouterr().err
        assert "quotient 0" in err and "component order" in err


class TestForestSuite:
    def test_cycle_marginals_and_drift(self):
        code, out = run_cli(
            [
                "wsf-marginals",
                "--family",
                "free-abelian:1",
                "--moduli",
                "6;12",
                "--samples",
                "600",
                "--radius",
                "1",
                "--seed",
                "3",
            ]
        )
        assert code == 0
        header, rows = parse_csv(out)
        fi, mi, di = header.index("frequency"), header.index("mean_degree"), header.index("drift")
        for row in rows:
            m = {"6": 6, "12": 12}[row[header.index("N")]]
            assert abs(float(row[fi]) - (m - 1) / m) < 0.05
        first, second = rows[0], rows[len(rows) // 2]
        assert first[mi] == "5/3" and second[mi] == "11/6"
        assert first[di] == "" and second[di] != ""

    def test_sample_ust_edge_lists(self):
        code, out = run_cli(
            ["sample-ust", "--family", "free-abelian:1", "--moduli", "5", "--samples", "4"]
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["n", "sample", "u", "v", "slot"]
        assert len(rows) == 4 * 4
        assert "mean tree degree 8/5" in out


class TestWalkReports:
    def test_tree_entropy_final_partial(self):
        code, out = run_cli(["tree-entropy", "--family", "free:2", "--K", "80"])
        assert code == 0
        header, rows = parse_csv(out)
        assert rows[-1][0] == "80"
        assert abs(float(rows[-1][2]) - math.log(27 / 8)) < 1e-6

    def test_green_identity_value(self):
        code, out = run_cli(["green", "--family", "free:2", "--K", "60", "--radius", "1"])
        assert code == 0
        header, rows = parse_csv(out)
        values = {row[0]: float(row[1]) for row in rows}
        assert abs(values["e"] - 3 / 8) < 1e-3
        assert "residual_radius1" in out

    def test_homoclinic_residual_note(self):
        code, out = run_cli(["homoclinic", "--family", "free:2", "--K", "40"])
        assert code == 0
        note = [ln for ln in out.splitlines() if "residual_max" in ln][0]
        assert float(note.split(":")[-1]) < 1e-2

    def test_spectral_radius_verdicts(self):
        code, out = run_cli(["spectral-radius", "--family", "free:2", "--k-max", "60"])
        assert code == 0
        assert "amenable_like: false" in out
        code, out = run_cli(["spectral-radius", "--family", "free-abelian:1", "--k-max", "60"])
        assert code == 0
        assert "amenable_like: true" in out


class TestWindowDensity:
    def test_nested_cycles_shrink(self):
        code, out = run_cli(
            ["window-density", "--family", "free-abelian:1", "--moduli", "4;8;16", "--radius", "1"]
        )
        assert code == 0
        vals = [float(v) for v in column(out, "covering_radius_probes64")]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < vals[0]
        assert column(out, "mode") == ["enumerated"] * 3
        assert column(out, "component_order") == ["4", "8", "16"]

    def test_single_coordinate_is_filled_by_constants(self):
        code, out = run_cli(
            ["window-density", "--family", "free-abelian:1", "--moduli", "3", "--radius", "0"]
        )
        assert code == 0
        assert column(out, "covering_radius_probes64") == ["0"]
        assert column(out, "component_order") == ["3"]

    def test_trivial_quotient(self):
        code, out = run_cli(
            ["window-density", "--family", "free-abelian:1", "--moduli", "1", "--radius", "0"]
        )
        assert code == 0
        assert column(out, "component_order") == ["1"]
        assert column(out, "covering_radius_probes64") == ["0"]

    def test_window_beyond_injectivity_fails(self, capsys):
        code, _ = run_cli(
            ["window-density", "--family", "free-abelian:1", "--moduli", "4", "--radius", "2"]
        )
        assert code == 1
        assert "injectivity" in capsys.readouterr().err

    def test_sampled_mode_after_cap(self):
        code, out = run_cli(
            [
                "window-density",
                "--family",
                "free-abelian:1",
                "--moduli",
                "16",
                "--radius",
                "1",
                "--max-enumerate",
                "8",
            ]
        )
        assert code == 0
        assert column(out, "mode") == ["sampled(8)"]

    def test_exact_covering_radius_formula(self):
        # single diagonal component {(c, c)}: probe (0, 1/2) sits at sup
        # distance 1/4
        reps = np.zeros((1, 2))
        assert _covering_radius(np.array([[0.0, 0.5]]), reps) == pytest.approx(0.25)
        assert _covering_radius(np.array([[0.3, 0.3]]), reps) == pytest.approx(0.0)

    def test_cycle_component_values(self):
        from groupforests import build_laplacian, laplacian_element

        m = 8
        cfg = resolve_config("window-density", family="free-abelian:1", moduli=str(m))
        lap = build_laplacian(cfg.quotients[0], cfg.f)
        reps, mode, order = _component_window_values(cfg, lap, [0, 1], 0)
        assert mode == "enumerated" and order == m
        # window {identity, generator} projections are (0, k/m) up to order
        offsets = sorted((reps[:, 1] - reps[:, 0]) % 1.0)
        assert np.allclose(offsets, [k / m for k in range(m)])
        # worst probe sits halfway between adjacent components
        worst = _covering_radius(np.array([[0.0, 1 / (2 * m)]]), reps)
        assert worst == pytest.approx(1 / (4 * m))


class TestOutputContract:
    def test_reruns_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = [
            "wsf-marginals",
            "--family",
            "free-abelian:2",
            "--moduli",
            "3,3;6,6",
            "--samples",
            "200",
            "--radius",
            "0",
            "--seed",
            "5",
        ]
        assert cli.main(base + ["--out", str(a)]) == 0
        assert cli.main(base + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_threads_do_not_change_rows(self):
        base = ["identity", "--family", "free-abelian:1", "--moduli", "3;5;7"]
        _, out1 = run_cli(base + ["--threads", "1"])
        _, out4 = run_cli(base + ["--threads", "4"])
        strip = lambda text: [ln for ln in text.splitlines() if not ln.startswith("#   threads")]
        assert strip(out1) == strip(out4)

    def test_header_block_records_config(self):
        _, out = run_cli(
            ["green", "--family", "free:2", "--K", "25", "--radius", "1", "--seed", "9"]
        )
        assert "#   operation: green" in out
        assert "#   family: free:2" in out
        assert "#   K: 25" in out
        assert "#   seed: 9" in out
        assert out.startswith("# config:")

    def test_config_file_with_flag_override(self, tmp_path):
        cfg_file = tmp_path / "run.yml"
        cfg_file.write_text(
            "family: free-abelian:1\nmoduli: '4;8'\nsamples: 150\nradius: 0\nseed: 7\n"
        )
        _, out = run_cli(["wsf-marginals", "--config", str(cfg_file), "--samples", "50"])
        assert "#   samples: 50" in out
        assert "#   seed: 7" in out

    def test_f_file(self, tmp_path):
        f_file = tmp_path / "elem.txt"
        f_file.write_text("e 4\na -2\nA -2\n")
        code, out = run_cli(
            [
                "sample-ust",
                "--family",
                "free-abelian:1",
                "--moduli",
                "6",
                "--samples",
                "2",
                "--f-file",
                str(f_file),
            ]
        )
        assert code == 0
        assert "a -2" in out

    def test_quotient_file(self, tmp_path):
        q = FiniteQuotient.from_moduli(Z, (5,))
        q_file = tmp_path / "c5.quot"
        q_file.write_text(q.to_text())
        code, out = run_cli(
            ["identity", "--family", "free-abelian:1", "--quotient-file", str(q_file)]
        )
        assert code == 0
        assert column(out, "tau") == ["5"]
        assert str(q_file) in out

    def test_error_exit_paths(self, capsys):
        assert run_cli(["identity", "--family", "free-abelian:1"])[0] == 1
        assert "error:" in capsys.readouterr().err
        assert run_cli(["green", "--family", "nonsense:1"])[0] == 1
        capsys.readouterr()
        assert run_cli(["tree-entropy", "--family", "free-abelian:1", "--f", "e 1; a -1"])[0] == 1
