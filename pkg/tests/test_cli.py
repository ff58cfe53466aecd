import json

import pytest

from elliptic_bailey.cli import main, parse_complex, CliError


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestComplexParsing:
    def test_forms(self):
        assert parse_complex("0.5") == 0.5
        assert parse_complex("-0.3") == -0.3
        assert parse_complex("0.5+0.2i") == 0.5 + 0.2j
        assert parse_complex("0.5-0.2i") == 0.5 - 0.2j
        assert parse_complex("1e-2+3e-1i") == 0.01 + 0.3j

    def test_rejects_spaces_and_garbage(self):
        with pytest.raises(CliError):
            parse_complex("0.5 + 0.2i")
        with pytest.raises(CliError):
            parse_complex("spam")


class TestVerify:
    def test_json_line_count_and_exit(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "matrix-bailey", "--N", "4",
                               "--draws", "5", "--seed", "42", "--json")
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 6  # 5 reports + summary
        docs = [json.loads(line) for line in lines]
        assert all(d["schema"] == "elliptic-bailey-report/1" for d in docs[:-1])
        assert docs[-1]["schema"] == "elliptic-bailey-summary/1"
        assert docs[-1]["n_pass"] == 5

    def test_scalar_coxeter_residual_zero(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "coxeter", "--N", "0",
                               "--draws", "1", "--seed", "7", "--json")
        assert code == 0
        rep = json.loads(out.strip().splitlines()[0])
        assert float.fromhex(rep["residual"]["f"]) == 0.0

    def test_missing_config_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "verify", "beta-integral", "--config", "missing.toml")
        assert code == 2
        assert "not found" in err

    def test_unknown_config_key_exits_2(self, capsys, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[campaign]\ndraws = 3\nwibble = 1\n")
        code, _, err = run_cli(capsys, "verify", "matrix-bailey", "--config", str(cfg))
        assert code == 2
        assert "wibble" in err

    def test_config_file_with_flag_override(self, capsys, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[campaign]\ndraws = 2\nseed = 9\nn = 3\n")
        code, out, _ = run_cli(capsys, "verify", "matrix-bailey",
                               "--config", str(cfg), "--draws", "1", "--json")
        assert code == 0
        assert len(out.strip().splitlines()) == 2  # flag overrode draws

    def test_failure_exit_code(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "matrix-bailey", "--N", "3",
                               "--draws", "2", "--seed", "3", "--tol", "1e-30")
        assert code == 1

    def test_inadmissible_fixed_parameter(self, capsys, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[campaign]\ndraws = 4\n\n[fixed]\nt = 1.2\n")
        code, out, _ = run_cli(capsys, "verify", "star-triangle", "--config", str(cfg), "--json")
        assert code == 1
        lines = out.strip().splitlines()
        assert len(lines) == 2  # one validation failure + summary
        assert json.loads(lines[0])["error"]

    def test_byte_identical_reruns(self, capsys):
        args = ("verify", "special-functions", "--draws", "6", "--seed", "123", "--json")
        _, out1, _ = run_cli(capsys, *args)
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2

    def test_fifty_draw_campaign_emits_51_lines(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "matrix-bailey", "--N", "6",
                               "--draws", "50", "--seed", "42", "--json")
        assert code == 0
        assert len(out.strip().splitlines()) == 51


class TestEval:
    def test_theta_zero(self, capsys):
        code, out, _ = run_cli(capsys, "eval", "theta", "--z", "1", "--p", "0.2")
        assert code == 0
        assert out.splitlines()[0].endswith("= 0.0")

    def test_m_entry_triangular_zero(self, capsys):
        code, out, _ = run_cli(capsys, "eval", "m-entry", "--N", "2", "--m", "3",
                               "--a", "0.3", "--k", "0.7", "--p", "0.1", "--q", "0.2")
        assert code == 0
        assert out.splitlines()[0].endswith("= 0.0")

    def test_gamma_matches_library(self, capsys):
        code, out, _ = run_cli(capsys, "eval", "gamma", "--z", "0.5", "--p", "0.1", "--q", "0.2")
        assert code == 0
        from elliptic_bailey.special_functions import NomePair, elliptic_gamma

        val = float(out.splitlines()[0].split("=")[1].strip())
        assert abs(val - elliptic_gamma(0.5, NomePair(0.1, 0.2)).real) < 1e-15
        assert "truncation orders" in out

    def test_domain_error_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "eval", "gamma", "--z", "1.0", "--p", "0.1", "--q", "0.2")
        assert code == 2

    def test_missing_argument_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "eval", "gamma", "--p", "0.1", "--q", "0.2")
        assert code == 2
        assert "--z" in err

    def test_d_entry(self, capsys):
        code, out, _ = run_cli(capsys, "eval", "d-entry", "--m", "0", "--a", "0.4",
                               "--b", "0.5", "--c", "0.9", "--p", "0.1", "--q", "0.2")
        assert code == 0
        assert out.splitlines()[0].endswith("= 1.0")

    def test_nonconvergence_exit_code(self, capsys, monkeypatch):
        import math
        from elliptic_bailey import cli
        from elliptic_bailey.report import VerificationReport

        def fake_run(config):
            return [VerificationReport(
                identity=config.identity, params={}, lhs=None, rhs=None,
                residual=math.inf, tolerance=1e-9, draw_index=0,
                error="non-convergence: stub integral hit the node cap",
            )]

        monkeypatch.setattr(cli, "run_campaign", fake_run)
        code, _, _ = run_cli(capsys, "verify", "beta-integral", "--draws", "1")
        assert code == 3
