import subprocess
import sys

import pytest

from nzddopt import cli
from nzddopt.core import read_nzdd
from nzddopt.data import gen_rofk, write_libsvm
from nzddopt.lp import LPResult


def run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def parse_solution(text):
    rows = dict(line.split("\t", 1) for line in text.splitlines() if not line.startswith("w\t"))
    return float(rows["objective"])


@pytest.fixture
def svm(tmp_path):
    path = tmp_path / "s.svm"
    write_libsvm(gen_rofk(n=8, k=4, r=2, m=60, seed=1), path)
    return path


class TestStatsAndCompress:
    def test_stats_abcd(self, capsys, fixtures_dir):
        code, out, _ = run_cli(capsys, "stats", fixtures_dir / "abcd.nzdd")
        assert code == 0 and "paths\t4\n" in out and "valid\tok" in out

    def test_stats_invalid(self, capsys, tmp_path):
        p = tmp_path / "bad.nzdd"
        p.write_text("nzdd 2 2 3\n0 1 1 2\n0 1 1 2\n")
        code, out, _ = run_cli(capsys, "stats", p)
        assert code == 1 and "condition2" in out

    def test_compress(self, capsys, tmp_path):
        fam = tmp_path / "f.txt"
        fam.write_text("0 1 2\n1\n1 2 3\n2 3\n")
        out_path = tmp_path / "g.nzdd"
        code, _, err = run_cli(capsys, "compress", fam, "-o", out_path)
        assert code == 0 and "paths\t4" in err
        assert read_nzdd(out_path).ground_size == 4

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "stats", tmp_path / "nope.nzdd")
        assert code == 1 and err.startswith("error:")

    def test_format_error_has_line(self, capsys, tmp_path):
        p = tmp_path / "bad.nzdd"
        p.write_text("nzdd 2 1 1\n0 q\n")
        code, _, err = run_cli(capsys, "stats", p)
        assert code == 1 and "2" in err


class TestExtend:
    def test_row_count(self, capsys, fixtures_dir, tmp_path):
        out = tmp_path / "x.lp"
        code, _, err = run_cli(capsys, "extend", fixtures_dir / "tiny_system.txt", "-o", out)
        assert code == 0
        info = dict(line.split("\t") for line in err.splitlines())
        text = out.read_text().splitlines()
        rows = text[text.index("Subject To") + 1:text.index("Bounds")]
        assert len(rows) == int(info["edges"]) == int(info["extended_rows"])
        assert info["duplicates_removed"] == "1"

    def test_integer_needs_mode(self, capsys, tmp_path):
        p = tmp_path / "s.txt"
        p.write_text("vars 2\nrow 2 0:2 1:1\n")
        code, _, err = run_cli(capsys, "extend", p, "-o", tmp_path / "o.lp")
        assert code == 1 and "--int-mode" in err
        code, _, _ = run_cli(capsys, "extend", p, "--int-mode", "sigma", "-o", tmp_path / "o.lp")
        assert code == 0


class TestSoftmargin:
    def test_algorithms_agree(self, capsys, svm, tmp_path):
        vals = {}
        for algo in ("export-lp", "cg", "erlp"):
            out = tmp_path / f"{algo}.txt"
            code, _, _ = run_cli(capsys, "softmargin", svm, "--nu", 0.3, "--algo", algo, "--eps", 1e-3, "-o", out)
            assert code == 0
            vals[algo] = parse_solution(out.read_text())
        assert abs(vals["cg"] - vals["export-lp"]) <= 1e-3
        assert abs(vals["erlp"] - vals["export-lp"]) <= 1e-3

    def test_lp_out_and_log(self, capsys, svm, tmp_path):
        lp = tmp_path / "p.lp"
        code, out, _ = run_cli(capsys, "softmargin", svm, "--nu", 0.5, "--algo", "export-lp", "--lp-out", lp)
        assert code == 0 and lp.read_text().startswith("Maximize") and "rho\t" in out
        log = tmp_path / "log.tsv"
        code, _, _ = run_cli(capsys, "softmargin", svm, "--nu", 0.5, "--algo", "erlp", "--eps", 0.1, "--log", log)
        lines = log.read_text().splitlines()
        assert code == 0 and lines[0] == "t\tj\tdelta\tentropy\tobjective" and len(lines) >= 2

    def test_bad_nu(self, capsys, svm):
        code, _, err = run_cli(capsys, "softmargin", svm, "--nu", 0, "--algo", "cg")
        assert code == 1

    def test_numerical_failure(self, capsys, svm, monkeypatch):
        monkeypatch.setattr(cli, "solve_lp", lambda s: LPResult("numerical-failure"))
        code, _, err = run_cli(capsys, "softmargin", svm, "--nu", 0.5, "--algo", "export-lp")
        assert code == 2 and "numerical failure" in err


class TestGen:
    @pytest.mark.parametrize("kind", ["mip", "rofk"])
    def test_deterministic(self, capsys, tmp_path, kind):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(capsys, "gen", kind, "--m", 40, "--seed", 5, "-o", a)[0] == 0
        assert run_cli(capsys, "gen", kind, "--m", 40, "--seed", 5, "-o", b)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "nzddopt", "gen", "rofk", "--m", "3"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0 and len(proc.stdout.splitlines()) == 3
