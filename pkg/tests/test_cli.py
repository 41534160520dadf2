import json
import subprocess
import sys

import numpy as np
import pytest

from momcf.cli import TrainConfig, main, run_train
from momcf.serialize import deserialize_model


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    data, truth = d / "train.tsv", d / "truth.txt"
    assert main(["synth", "--d", "30", "--k", "2", "--n", "800", "--seed", "3", "--separable",
                 "--output", str(data), "--truth", str(truth)]) == 0
    return d, data, truth


def train(d, data, name="model.txt", *extra):
    out = d / name
    code = main(["train", "--input", str(data), "--output", str(out), "--k", "2", *extra])
    return code, out


class TestTrain:
    def test_pipeline(self, synth_files, capsys):
        d, data, _ = synth_files
        code, out = train(d, data)
        assert code == 0
        diag = json.loads(capsys.readouterr().err)
        assert diag["passes"] == 3
        assert diag["whitening_residual"] <= 1e-8
        m = deserialize_model(out)
        assert (m.d, m.k) == (30, 2)
        post = (d / "model.txt.posteriors.tsv").read_text().splitlines()
        assert len(post) == 800

    def test_deterministic_bytes(self, synth_files):
        d, data, _ = synth_files
        _, a = train(d, data, "a.txt")
        _, b = train(d, data, "b.txt")
        assert a.read_bytes() == b.read_bytes()

    def test_rank_deficient(self, tmp_path, capsys):
        data = tmp_path / "same.tsv"
        data.write_text("".join(f"u{u}\ti{i}\n" for u in range(5) for i in range(3)))
        code, _ = train(tmp_path, data)
        assert code == 2
        err = capsys.readouterr().err
        assert "rank 1" in err and "topk_eig" in err

    def test_missing_input(self, tmp_path):
        assert train(tmp_path, tmp_path / "absent.tsv")[0] == 2

    def test_malformed_input(self, tmp_path, capsys):
        bad = tmp_path / "bad.tsv"
        bad.write_text("u1\ti1\nonlyonecolumn\n")
        assert train(tmp_path, bad)[0] == 2
        assert "line 2" in capsys.readouterr().err

    def test_diagnostics_file(self, synth_files, tmp_path):
        _, data, _ = synth_files
        diag = tmp_path / "diag.json"
        code, _ = train(tmp_path, data, "m.txt", "--diagnostics", str(diag))
        assert code == 0
        report = json.loads(diag.read_text())
        assert abs(sum(report["stage_seconds"].values()) - report["total_seconds"]) <= 0.05 * report["total_seconds"] + 0.01

    def test_run_train_config(self, synth_files, tmp_path):
        _, data, _ = synth_files
        res = run_train(TrainConfig(str(data), str(tmp_path / "m.txt"), k=2))
        assert res.diagnostics["passes"] == 3

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig("in", "out", k=0)
        with pytest.raises(ValueError):
            TrainConfig("", "out")


class TestUsage:
    @pytest.mark.parametrize("argv", [[], ["bogus"], ["train", "--input", "x"], ["train", "--k", "two"]])
    def test_usage_errors(self, argv):
        assert main(argv) == 1

    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "recommend" in capsys.readouterr().out

    def test_bounds_missing_value(self, capsys):
        assert main(["bounds", "--k", "2", "--sigma1", "1"]) == 1
        assert "sigmaK" in capsys.readouterr().err

    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "momcf", "bounds", "--k", "2", "--sigma1", "1",
                               "--sigmaK", "0.5", "--d2s", "1", "--d3s", "1", "--n", "10", "--tsv"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "mu_bound\t" in proc.stdout


class TestOtherCommands:
    def test_recommend(self, synth_files, capsys):
        d, data, _ = synth_files
        _, out = train(d, data, "rec.txt")
        capsys.readouterr()
        user = data.read_text().split("\t", 1)[0]
        assert main(["recommend", "--input", str(data), "--model", str(out), "--tau", "3", "--user", user]) == 0
        rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()]
        assert [r[1] for r in rows] == ["1", "2", "3"]
        seen = {line.split("\t")[1] for line in data.read_text().splitlines() if line.startswith(user + "\t")}
        assert not seen & {r[2] for r in rows}

    def test_recommend_unknown_user(self, synth_files):
        d, data, _ = synth_files
        _, out = train(d, data, "rec2.txt")
        assert main(["recommend", "--input", str(data), "--model", str(out), "--user", "nobody"]) == 2

    def test_eval(self, synth_files, tmp_path):
        d, data, truth = synth_files
        _, out = train(d, data, "ev.txt")
        report = tmp_path / "report.tsv"
        assert main(["eval", "--train", str(data), "--test", str(data), "--model", str(out),
                     "--tau", "5,10", "--no-exclude-seen", "--output", str(report)]) == 0
        lines = report.read_text().splitlines()
        assert lines[0] == "tau\tprecision\trecall\tmap" and len(lines) == 3

    def test_eval_model_mismatch(self, synth_files, tmp_path):
        _, data, _ = synth_files
        small = tmp_path / "small.txt"
        small.write_text("SPECCF 1 2 1\n1\n0.5\n0.5\n")
        assert main(["eval", "--train", str(data), "--test", str(data), "--model", str(small)]) == 2

    def test_plsi(self, synth_files, tmp_path, capsys):
        _, data, _ = synth_files
        out = tmp_path / "plsi.txt"
        assert main(["plsi-train", "--input", str(data), "--output", str(out), "--k", "2"]) == 0
        assert out.read_text().startswith("SPECCF-PLSI 1 30 2 800")
        trace = json.loads(capsys.readouterr().err)["loglik"]
        assert np.all(np.diff(trace) >= -1e-9)

    def test_bounds_from_data(self, synth_files, capsys):
        _, data, truth = synth_files
        assert main(["bounds", "--k", "2", "--input", str(data), "--model", str(truth)]) == 0
        out = capsys.readouterr().out
        assert "estimated from data" in out and "from model" in out

    def test_bounds_bad_field(self, capsys):
        assert main(["bounds", "--k", "2", "--sigma1", "1", "--sigmaK", "2", "--d2s", "1",
                     "--d3s", "1", "--n", "5"]) == 2
        assert "sigmaK" in capsys.readouterr().err

    def test_synth_deterministic(self, tmp_path):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        for path in (a, b):
            assert main(["synth", "--d", "20", "--k", "3", "--n", "50", "--output", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_synth_too_few_items(self, tmp_path):
        assert main(["synth", "--d", "5", "--k", "2", "--n", "5", "--output", str(tmp_path / "x")]) == 2
