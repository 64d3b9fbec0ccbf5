import hashlib
import json
from pathlib import Path

import pytest

from liftguard.cli import main
from liftguard.data import load_dataset


def tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(path.relative_to(root).as_posix().encode())
            h.update(path.read_bytes())
    return h.hexdigest()


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    assert run("gen", "--out", root, "--n", 12, "--style-mix", "0.5",
               "--noise", "0.003", "--seed", "5") == 0
    return root


@pytest.fixture(scope="module")
def trained(tmp_path_factory, corpus):
    out = tmp_path_factory.mktemp("trained")
    model = out / "model.liftlstm"
    assert run("train", "--data", corpus, "--out", model,
               "--epochs", 40, "--seed", 3) == 0
    return model


class TestGen:
    def test_paper_shaped_tree(self, tmp_path):
        assert run("gen", "--out", tmp_path, "--n", 62, "--style-mix", "0.5",
                   "--noise", "0", "--seed", 1) == 0
        good = list((tmp_path / "good").glob("*.jsonl"))
        bad = list((tmp_path / "bad").glob("*.jsonl"))
        assert len(good) == 31 and len(bad) == 31
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert len(manifest["clips"]) == 62

    def test_empty_tree_exits_zero(self, tmp_path):
        assert run("gen", "--out", tmp_path, "--n", 0) == 0
        assert (tmp_path / "good").is_dir() and (tmp_path / "bad").is_dir()
        assert json.loads((tmp_path / "manifest.json").read_text())["clips"] == []

    def test_same_seed_byte_identical_trees(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("gen", "--out", out, "--n", 6, "--noise", "0.01",
                       "--seed", 9) == 0
        assert tree_digest(a) == tree_digest(b)

    def test_loadable_by_dataset_io(self, corpus):
        sequences, manifest = load_dataset(corpus)
        assert len(sequences) == 12
        assert sum(manifest.class_counts.values()) == 12


class TestTrain:
    def test_artifacts_written(self, trained, corpus, capsys):
        out_dir = trained.parent
        assert trained.exists()
        history = (out_dir / "history.csv").read_text().splitlines()
        assert history[0] == "epoch,loss,categorical_accuracy"
        assert len(history) >= 2
        report = json.loads((out_dir / "report.json").read_text())
        assert set(report) == {"confusion", "accuracy", "roc", "auc"}
        total = sum(sum(row) for row in report["confusion"])
        assert total == 3  # ceil(12 * 0.25)

    def test_zero_epochs_rejected_before_work(self, corpus, tmp_path):
        with pytest.raises(SystemExit) as err:
            run("train", "--data", corpus, "--out", tmp_path / "m", "--epochs", 0)
        assert err.value.code == 2

    def test_bad_fraction_rejected(self, corpus, tmp_path):
        with pytest.raises(SystemExit) as err:
            run("train", "--data", corpus, "--out", tmp_path / "m", "--test-frac", "1.5")
        assert err.value.code == 2

    def test_missing_dataset_is_runtime_error(self, tmp_path):
        assert run("train", "--data", tmp_path / "nope", "--out", tmp_path / "m") == 1

    def test_prints_accuracy_json(self, corpus, tmp_path, capsys):
        assert run("train", "--data", corpus, "--out", tmp_path / "m",
                   "--epochs", 5, "--seed", 0) == 0
        line = capsys.readouterr().out.strip().splitlines()[-1]
        summary = json.loads(line)
        assert {"accuracy", "auc", "test_samples"} <= set(summary)


class TestEvalPredict:
    def test_eval_prints_report(self, trained, corpus, capsys):
        assert run("eval", "--model", trained, "--data", corpus) == 0
        report = json.loads(capsys.readouterr().out.strip())
        assert set(report) == {"confusion", "accuracy", "roc", "auc"}
        assert sum(sum(row) for row in report["confusion"]) == 12

    def test_eval_on_training_tree_beats_heldout_accuracy(self, trained, corpus, capsys):
        # the training tree mixes the (well-fit) train split back in, so
        # full-tree accuracy sits at or above the held-out accuracy
        heldout = json.loads((trained.parent / "report.json").read_text())["accuracy"]
        assert run("eval", "--model", trained, "--data", corpus) == 0
        full_tree = json.loads(capsys.readouterr().out.strip())["accuracy"]
        assert full_tree >= heldout

    def test_eval_missing_model_is_runtime_error(self, corpus, tmp_path):
        assert run("eval", "--model", tmp_path / "nope", "--data", corpus) == 1

    def test_predict_short_file_emits_nothing(self, trained, corpus, tmp_path, capsys):
        clip = next((Path(corpus) / "good").glob("*.jsonl"))
        short = tmp_path / "short.jsonl"
        short.write_text("".join(clip.read_text().splitlines(True)[:29]))
        assert run("predict", "--model", trained, "--input", short) == 0
        assert capsys.readouterr().out == ""

    def test_predict_sixty_frames_two_windows(self, trained, corpus, tmp_path, capsys):
        clip = next((Path(corpus) / "good").glob("*.jsonl"))
        double = tmp_path / "double.jsonl"
        double.write_text(clip.read_text() + clip.read_text())
        assert run("predict", "--model", trained, "--input", double) == 0
        lines = [json.loads(l) for l in capsys.readouterr().out.strip().splitlines()]
        assert [l["window_start"] for l in lines] == [0, 30]
        for line in lines:
            assert line["label"] in ("good", "bad")
            assert len(line["probs"]) == 2
            assert 0.5 <= line["confidence"] <= 1.0

    def test_corrupt_model_is_runtime_error(self, corpus, tmp_path):
        bad = tmp_path / "bad.model"
        bad.write_text("garbage\n")
        assert run("eval", "--model", bad, "--data", corpus) == 1

    def test_roc_csv_export(self, trained, corpus, tmp_path, capsys):
        roc_path = tmp_path / "roc.csv"
        assert run("eval", "--model", trained, "--data", corpus,
                   "--roc-csv", roc_path) == 0
        capsys.readouterr()
        lines = roc_path.read_text().strip().splitlines()
        assert lines[0] == "fpr,tpr"
        assert len(lines) >= 3


class TestCanonicalizeFlag:
    def test_flag_threads_through_descriptor_and_eval(self, corpus, tmp_path, capsys):
        from liftguard.data import load_model as load

        model_path = tmp_path / "canon.liftlstm"
        assert run("train", "--data", corpus, "--out", model_path,
                   "--epochs", 5, "--canonicalize", "--seed", 2) == 0
        capsys.readouterr()
        model = load(model_path)
        assert model.descriptor["canonicalize"] is True
        # eval and predict read the flag back from the descriptor
        assert run("eval", "--model", model_path, "--data", corpus) == 0
        json.loads(capsys.readouterr().out.strip())
        clip = next((Path(corpus) / "good").glob("*.jsonl"))
        assert run("predict", "--model", model_path, "--input", clip) == 0
        line = json.loads(capsys.readouterr().out.strip())
        assert line["label"] in ("good", "bad")


def test_usage_error_without_subcommand():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2
