import csv

import numpy as np
import pytest

from gfsc.cli import ABLATE_HEADER, SWEEP_HEADER, main
from gfsc.data import ImageSpec, gen_images, load_csv, load_labels, save_csv, save_labels
from gfsc.experiment import read_report
from gfsc.graph import normalized_laplacian, smoothness_energy
from gfsc.selfexpress import IterationConfig, LsrConfig, run_flsr


def strip_timing(text):
    return "\n".join(line for line in text.splitlines() if not line.startswith("timing."))


def read_table(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def fixture_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("fixture")
    assert main(["gen", "--seed", "7", "--out", str(d / "sub")]) == 0
    return d / "sub.csv", d / "sub.labels.csv"


@pytest.fixture(scope="module")
def image_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("images")
    ds = gen_images(ImageSpec(per_class=30, seed=1))
    save_csv(d / "img.csv", ds.features)
    save_labels(d / "img.labels.csv", ds.labels)
    return d / "img.csv", d / "img.labels.csv"


def cluster_args(fixture_files, out, *extra):
    data, labels = fixture_files
    return ["cluster", "--data", str(data), "--labels", str(labels), "--out", str(out), *extra]


class TestGen:
    def test_default_files(self, fixture_files):
        data, labels = fixture_files
        assert load_csv(data).features.shape == (150, 30)
        np.testing.assert_array_equal(np.bincount(load_labels(labels)), [50, 50, 50])

    def test_deterministic(self, tmp_path):
        for name in ("a", "b"):
            assert main(["gen", "--seed", "3", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.labels.csv").read_bytes() == (tmp_path / "b.labels.csv").read_bytes()

    def test_subspace_dim_too_large(self, tmp_path, capsys):
        code = main(["gen", "--ambient-dim", "5", "--subspace-dim", "5", "--out", str(tmp_path / "x")])
        assert code == 1
        assert "usage error" in capsys.readouterr().err

    def test_images_binary(self, tmp_path):
        assert main(["gen", "--kind", "images", "--per-cluster", "3", "--binary",
                     "--out", str(tmp_path / "im")]) == 0
        assert (tmp_path / "im.smcl").read_bytes()[:5] == b"SMCL1"
        assert len(load_labels(tmp_path / "im.labels.csv")) == 12


class TestCluster:
    def test_flsr_fixture_report(self, fixture_files, tmp_path):
        out = tmp_path / "r.txt"
        code = main(cluster_args(fixture_files, out, "--algo", "flsr", "--alpha", "0.1", "--k", "1",
                                 "--seed", "7"))
        assert code == 0
        rep = read_report(out)
        assert rep["format"] == "gfsc-report/1"
        assert float(rep["result.acc"]) >= 0.95
        assert rep["result.converged"] == "true"
        assert int(rep["result.iterations"]) <= 50
        assert f"trace.residual.{rep['result.iterations']}" in rep
        labels = load_labels(tmp_path / rep["result.labels_file"])
        assert labels.shape == (150,)

    @pytest.mark.parametrize("algo", ["lsr", "trr", "ftrr"])
    def test_other_algorithms(self, fixture_files, tmp_path, algo):
        code = main(cluster_args(fixture_files, tmp_path / "r.txt", "--algo", algo, "--alpha", "0.1",
                                 "--k", "1", "--p", "10"))
        assert code == 0
        assert 0 <= float(read_report(tmp_path / "r.txt")["result.acc"]) <= 1

    def test_trr_without_p(self, fixture_files, tmp_path, capsys):
        code = main(cluster_args(fixture_files, tmp_path / "r.txt", "--algo", "trr", "--alpha", "1"))
        assert code == 1
        assert "p required" in capsys.readouterr().err

    def test_byte_identical_except_timing(self, fixture_files, tmp_path):
        texts, label_bytes = [], []
        for _ in range(2):
            assert main(cluster_args(fixture_files, tmp_path / "r.txt", "--algo", "ftrr", "--alpha", "0.1",
                                     "--k", "1", "--p", "10", "--repeat", "2")) == 0
            texts.append((tmp_path / "r.txt").read_text())
            label_bytes.append((tmp_path / "r.labels.csv").read_bytes())
        assert strip_timing(texts[0]) == strip_timing(texts[1])
        assert label_bytes[0] == label_bytes[1]
        assert "result.acc_std" in texts[0]

    def test_config_file_and_override(self, fixture_files, tmp_path):
        data, labels = fixture_files
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"# fixture\ndata = {data}\nlabels = {labels}\nalgo = lsr\nalpha = 0.1\n"
                       f"out = {tmp_path / 'from_file.txt'}\n")
        assert main(["cluster", "--config", str(cfg)]) == 0
        assert read_report(tmp_path / "from_file.txt")["config.algo"] == "lsr"
        assert main(["cluster", "--config", str(cfg), "--alpha", "0.5", "--out", str(tmp_path / "o.txt")]) == 0
        assert read_report(tmp_path / "o.txt")["config.alpha"] == "0.5"

    def test_report_reused_as_config(self, fixture_files, tmp_path):
        first = tmp_path / "first.txt"
        assert main(cluster_args(fixture_files, first, "--algo", "flsr", "--alpha", "0.1", "--k", "1")) == 0
        second = tmp_path / "second.txt"
        assert main(["cluster", "--config", str(first), "--out", str(second)]) == 0
        skip = ("config.out", "result.labels_file")
        a = {k: v for k, v in read_report(first).items() if not k.startswith("timing.") and k not in skip}
        b = {k: v for k, v in read_report(second).items() if not k.startswith("timing.") and k not in skip}
        assert a == b

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("alpah = 1\n")
        assert main(["cluster", "--config", str(cfg)]) == 1

    def test_missing_data_file(self, tmp_path):
        code = main(["cluster", "--data", str(tmp_path / "nope.csv"), "--algo", "lsr", "--alpha", "1",
                     "--g", "2", "--out", str(tmp_path / "r.txt")])
        assert code == 2

    def test_malformed_data_file(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2\n3\n")
        code = main(["cluster", "--data", str(bad), "--algo", "lsr", "--alpha", "1", "--g", "2",
                     "--out", str(tmp_path / "r.txt")])
        assert code == 2

    def test_no_labels_needs_g(self, fixture_files, tmp_path):
        data, _ = fixture_files
        base = ["cluster", "--data", str(data), "--algo", "lsr", "--alpha", "0.1", "--out", str(tmp_path / "r.txt")]
        assert main(base) == 1
        assert main(base + ["--g", "3"]) == 0
        assert "result.acc" not in read_report(tmp_path / "r.txt")

    def test_bad_flag(self):
        assert main(["cluster", "--nonsense"]) == 1
        assert main([]) == 1


class TestSweep:
    def test_single_cell_matches_cluster(self, fixture_files, tmp_path):
        data, labels = fixture_files
        common = ["--data", str(data), "--labels", str(labels), "--algo", "flsr", "--seed", "7"]
        assert main(["sweep", *common, "--alpha-grid", "0.1", "--k-grid", "1", "--out", str(tmp_path / "s.csv")]) == 0
        assert main(["cluster", *common, "--alpha", "0.1", "--k", "1", "--out", str(tmp_path / "r.txt")]) == 0
        table = read_table(tmp_path / "s.csv")
        rep = read_report(tmp_path / "r.txt")
        assert table[0] == SWEEP_HEADER and len(table) == 2
        row = dict(zip(table[0], table[1]))
        for key in ("acc", "nmi", "pur", "iterations", "converged"):
            assert row[key] == rep[f"result.{key}"]
        assert row["status"] == "ok"

    def test_grid_cardinality_and_order(self, fixture_files, tmp_path):
        data, labels = fixture_files
        out = tmp_path / "s.csv"
        assert main(["sweep", "--data", str(data), "--labels", str(labels), "--algo", "flsr",
                     "--alpha-grid", "0.01,0.1,1", "--k-grid", "0,1,2", "--max-iter", "10",
                     "--out", str(out)]) == 0
        table = read_table(out)
        assert table[0] == SWEEP_HEADER and len(table) == 10
        assert [(r[0], r[1]) for r in table[1:4]] == [("0.01", "0"), ("0.01", "1"), ("0.01", "2")]
        accs = [float(r[2]) for r in table[1:]]
        assert max(accs) >= min(accs)

    def test_failed_cell_recorded(self, fixture_files, tmp_path):
        data, labels = fixture_files
        out = tmp_path / "s.csv"
        assert main(["sweep", "--data", str(data), "--labels", str(labels), "--algo", "flsr",
                     "--alpha-grid=-1,0.1", "--k-grid", "1", "--out", str(out)]) == 0
        rows = read_table(out)[1:]
        assert rows[0][-1].startswith("error:") and rows[1][-1] == "ok"

    def test_deterministic(self, fixture_files, tmp_path):
        data, labels = fixture_files
        outputs = []
        for _ in range(2):
            assert main(["sweep", "--data", str(data), "--labels", str(labels), "--algo", "ftrr", "--p", "10",
                         "--alpha-grid", "0.1,1", "--k-grid", "1", "--out", str(tmp_path / "s.csv")]) == 0
            outputs.append((tmp_path / "s.csv").read_bytes())
        assert outputs[0] == outputs[1]


class TestAblate:
    def test_rows_and_baseline(self, image_files, tmp_path):
        data, labels = image_files
        out = tmp_path / "ab.csv"
        assert main(["ablate", "--data", str(data), "--labels", str(labels), "--height", "16", "--width", "16",
                     "--k-max", "10", "--restarts", "3", "--out", str(out)]) == 0
        table = read_table(out)
        assert table[0] == ABLATE_HEADER
        assert [r[0] for r in table[1:]] == [str(k) for k in range(11)]
        rows = {int(r[0]): [float(v) for v in r[1:]] for r in table[1:]}
        assert rows[1][1] > rows[0][1]

    def test_k0_is_unfiltered_baseline(self, image_files, tmp_path):
        from gfsc.cli import ablation_rows
        from gfsc.data import add_gaussian_noise, as_images, load_dataset
        from gfsc.metrics import mean_image_scores
        data, labels = image_files
        ds = load_dataset(data, labels)
        rows = ablation_rows(ds.features, ds.labels, 16, 16, 1.0, 0.05, 0, 20, 1.0, seed=4, restarts=2)
        noisy = add_gaussian_noise(ds.features, 1.0, 0.05, 4) - 1.0
        rng_ = float(ds.features.max() - ds.features.min())
        p, s = mean_image_scores(as_images(ds.features, 16, 16), as_images(noisy, 16, 16), rng_)
        assert float(rows[0][1]) == p and float(rows[0][2]) == s

    def test_missing_labels(self, image_files, tmp_path):
        data, _ = image_files
        assert main(["ablate", "--data", str(data), "--height", "16", "--width", "16",
                     "--out", str(tmp_path / "ab.csv")]) == 1

    def test_dims_mismatch(self, image_files, tmp_path):
        data, labels = image_files
        assert main(["ablate", "--data", str(data), "--labels", str(labels), "--height", "8", "--width", "8",
                     "--out", str(tmp_path / "ab.csv")]) == 1

    def test_deterministic(self, image_files, tmp_path):
        data, labels = image_files
        for name in ("a.csv", "b.csv"):
            assert main(["ablate", "--data", str(data), "--labels", str(labels), "--height", "16",
                         "--width", "16", "--k-max", "2", "--restarts", "2", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestEmbed:
    def test_order_zero_returns_input(self, fixture_files, tmp_path):
        data, labels = fixture_files
        prefix = tmp_path / "e"
        assert main(["embed", "--data", str(data), "--labels", str(labels), "--algo", "flsr", "--alpha", "0.1",
                     "--k", "0", "--iterations", "1,2", "--out", str(prefix)]) == 0
        X = load_csv(data).features
        for t in (1, 2):
            assert np.max(np.abs(load_csv(tmp_path / f"e.iter{t}.csv").features - X)) <= 1e-12

    def test_two_exports_and_smoothness(self, fixture_files, tmp_path):
        data, labels = fixture_files
        assert main(["embed", "--data", str(data), "--labels", str(labels), "--algo", "flsr", "--alpha", "0.1",
                     "--k", "1", "--iterations", "1,5", "--out", str(tmp_path / "e")]) == 0
        X = load_csv(data).features
        X5 = load_csv(tmp_path / "e.iter5.csv").features
        assert X5.shape == X.shape == load_csv(tmp_path / "e.iter1.csv").features.shape
        graphs = {}
        run_flsr(X, LsrConfig(0.1), IterationConfig(1), lambda t, W, Xb: graphs.setdefault(t, W))
        # Xbar_5 was filtered on the graph of pass 4
        L = normalized_laplacian(graphs[4])
        assert np.all(smoothness_energy(L, X5) <= smoothness_energy(L, X) + 1e-10)

    def test_iteration_must_be_positive(self, fixture_files, tmp_path):
        data, labels = fixture_files
        assert main(["embed", "--data", str(data), "--algo", "flsr", "--alpha", "0.1", "--k", "1",
                     "--iterations", "0", "--out", str(tmp_path / "e")]) == 1
