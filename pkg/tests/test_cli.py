import io
import json

import pytest

from collapsehyp.cli import PipelineConfig, main
from collapsehyp.errors import CollapseHypError


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture
def workdir(tmp_path):
    for name in ("simplex-1", "simplex-2", "simplex-3", "dunce-hat", "bing-house", "squares-3", "squares-4"):
        assert run("example", name, "--out-dir", tmp_path)[0] == 0
    return tmp_path


class TestCollapse:
    def test_simplex3(self, workdir):
        code, out = run("collapse", "--in", workdir / "simplex-3.fl", "--seed", 7, "--out-dir", workdir)
        assert code == 0 and "7 steps" in out
        cert = (workdir / "simplex-3.cert").read_text()
        assert sum(line.startswith("collapse") for line in cert.splitlines()) == 7
        report = json.loads((workdir / "simplex-3.collapse.json").read_text())
        assert report["status"] == "collapsible" and report["seed"] == 7

    def test_dunce_hat(self, workdir):
        code, out = run("collapse", "--in", workdir / "dunce-hat.fl", "--exhaustive", "--out-dir", workdir)
        assert code == 1
        assert "non-collapsible (no free faces" in out
        assert not (workdir / "dunce-hat.cert").exists()

    def test_bing_house(self, workdir):
        code, out = run("collapse", "--in", workdir / "bing-house.fl", "--out-dir", workdir)
        assert code != 0 and "no free faces" in out

    def test_budget(self, workdir):
        code, _ = run("collapse", "--in", workdir / "simplex-3.fl", "--budget-steps", 2, "--out-dir", workdir)
        assert code == 2

    def test_parse_error(self, workdir, capsys):
        bad = workdir / "bad.fl"
        bad.write_text("0 1\n2 2\n")
        code, _ = run("collapse", "--in", bad, "--out-dir", workdir)
        assert code == 1
        assert "bad.fl:2" in capsys.readouterr().err


class TestHyperbolize:
    def test_triangle(self, workdir):
        run("collapse", "--in", workdir / "simplex-2.fl", "--out-dir", workdir)
        code, out = run("hyperbolize", "--in", workdir / "simplex-2.fl", "--cert", workdir / "simplex-2.cert",
                        "--out-dir", workdir)
        assert code == 0
        m = json.loads((workdir / "simplex-2.metric.json").read_text())
        assert all(s["residual"] < 1e-8 for s in m["steps"])
        assert out.count("step ") == 3

    def test_edge(self, workdir):
        run("collapse", "--in", workdir / "simplex-1.fl", "--out-dir", workdir)
        code, out = run("hyperbolize", "--in", workdir / "simplex-1.fl", "--cert", workdir / "simplex-1.cert",
                        "--out-dir", workdir)
        assert code == 0 and "2 vertices, 1 maximal simplices" in out

    def test_mismatched_certificate(self, workdir, capsys):
        run("collapse", "--in", workdir / "simplex-2.fl", "--out-dir", workdir)
        cert = (workdir / "simplex-2.cert").read_text().splitlines()
        steps = [i for i, line in enumerate(cert) if line.startswith("collapse")]
        cert[steps[0]], cert[steps[1]] = cert[steps[1]], cert[steps[0]]
        (workdir / "swapped.cert").write_text("\n".join(cert) + "\n")
        code, _ = run("hyperbolize", "--in", workdir / "simplex-2.fl", "--cert", workdir / "swapped.cert",
                      "--out-dir", workdir)
        assert code == 1
        assert "step 1" in capsys.readouterr().err


class TestVerify:
    def test_pipeline_passes(self, workdir):
        run("collapse", "--in", workdir / "simplex-2.fl", "--out-dir", workdir)
        run("hyperbolize", "--in", workdir / "simplex-2.fl", "--cert", workdir / "simplex-2.cert", "--out-dir", workdir)
        code, out = run("verify", "--metric", workdir / "simplex-2.metric.json", "--refinement", 2, 3,
                        "--samples", 200, "--out-dir", workdir)
        assert code == 0 and "verdict: pass" in out
        rows = (workdir / "simplex-2.violations.csv").read_text().splitlines()
        assert [r.split(",")[0] for r in rows[1:]] == ["2", "3"]
        report = json.loads((workdir / "simplex-2.report.json").read_text())
        assert report["verdict"] == "pass"
        assert (workdir / "simplex-2.loops.csv").exists()

    def test_counterexample_fails(self, workdir):
        code, out = run("verify", "--metric", workdir / "squares-3.metric.json", "--samples", 50, "--out-dir", workdir)
        assert code == 1
        assert "failing link at o" in out
        assert "4.712388980385" in out

    def test_flat_squares_pass(self, workdir):
        code, _ = run("verify", "--metric", workdir / "squares-4.metric.json", "--samples", 50, "--out-dir", workdir)
        assert code == 0

    def test_malformed_metric(self, workdir):
        (workdir / "broken.metric.json").write_text("{not json")
        code, _ = run("verify", "--metric", workdir / "broken.metric.json", "--out-dir", workdir)
        assert code == 1


class TestDeterminism:
    def _pipeline(self, d):
        run("example", "simplex-2", "--out-dir", d)
        run("collapse", "--in", d / "simplex-2.fl", "--seed", 3, "--out-dir", d)
        run("hyperbolize", "--in", d / "simplex-2.fl", "--cert", d / "simplex-2.cert", "--out-dir", d)
        run("verify", "--metric", d / "simplex-2.metric.json", "--samples", 100, "--seed", 3, "--out-dir", d)
        return {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    def test_byte_identical(self, tmp_path):
        a = self._pipeline(tmp_path / "a")
        b = self._pipeline(tmp_path / "b")
        assert a.keys() == b.keys() and len(a) >= 6
        assert a == b


class TestConfig:
    def test_rejects_nonpositive(self):
        with pytest.raises(CollapseHypError):
            PipelineConfig("collapse", samples=0)
        with pytest.raises(CollapseHypError):
            PipelineConfig("verify", refinement=[2, 0])

    def test_unknown_example(self, tmp_path):
        assert run("example", "klein-bottle", "--out-dir", tmp_path)[0] == 1
