import numpy as np
import pytest

from core.harmonium import HarmoniumParams, ModelDims
from core.parallel import make_rng
from tools.corpus_io.formats import load_corpus, load_latents
from tools.corpus_io.model_io import load_model, save_model
from tools.dwh_cli.main import main


@pytest.fixture
def synth_files(tmp_path):
    paths = {name: tmp_path / f"{name}.tsv" for name in ("text", "image", "labels", "split")}
    args = ["synth", "--n", "40", "--m", "6", "--k", "2", "--seed", "1"]
    for name in ("text", "image", "labels", "split"):
        args += [f"--out-{name}", str(paths[name])]
    code = main(args)
    assert code == 0
    return paths


@pytest.fixture
def model_file(tmp_path):
    rng = make_rng(3)
    params = HarmoniumParams.zeros(ModelDims(M=6, K=2, J=2)).replace(
        W=rng.normal(0.0, 0.2, (6, 2)), U=rng.normal(0.0, 0.2, (2, 2))
    )
    path = tmp_path / "model.dwh"
    save_model(params, path)
    return path


def _corpus_flags(paths, labels=False):
    flags = ["--text", str(paths["text"]), "--image", str(paths["image"])]
    if labels:
        flags += ["--labels", str(paths["labels"])]
    return flags


# =====================================================
# Subcommands
# =====================================================


def test_synth_writes_a_loadable_corpus(synth_files):
    corpus = load_corpus(synth_files["text"], synth_files["image"], synth_files["labels"])
    assert (len(corpus), corpus.M, corpus.K) == (40, 6, 2)
    assert synth_files["split"].read_text().count("\ttest\n") == 10


def test_train_then_project(synth_files, tmp_path, capsys):
    model = tmp_path / "model.dwh"
    report = tmp_path / "report.tsv"
    flags = ["--dims", "2", "--epochs", "2", "--batch-size", "20"]
    outputs = ["--out-model", str(model), "--report", str(report)]
    code = main(["train"] + _corpus_flags(synth_files) + flags + outputs)
    assert code == 0
    assert "trained 2 epochs" in capsys.readouterr().out
    assert load_model(model).dims == ModelDims(M=6, K=2, J=2)
    assert len(report.read_text().splitlines()) == 4

    latents = tmp_path / "latents.tsv"
    args = ["project", "--model", str(model)] + _corpus_flags(synth_files)
    code = main(args + ["--out", str(latents)])
    assert code == 0
    assert load_latents(latents).rows.shape == (40, 2)


def test_retrieve_on_duplicated_documents(tmp_path, capsys):
    text = tmp_path / "text.tsv"
    text.write_text("#vocab a b\nq0\ta:3\nq1\tb:3\nx0\ta:3\nx1\tb:3\n")
    image = tmp_path / "image.tsv"
    image.write_text("q0\t1\nq1\t1\nx0\t1\nx1\t1\n")
    labels = tmp_path / "labels.tsv"
    labels.write_text("q0\tA\nq1\tB\nx0\tA\nx1\tB\n")
    split = tmp_path / "split.tsv"
    split.write_text("q0\tquery\nq1\tquery\nx0\tindex\nx1\tindex\n")
    model = tmp_path / "model.dwh"
    save_model(HarmoniumParams.zeros(ModelDims(M=2, K=1, J=2)).replace(W=np.eye(2)), model)

    args = ["retrieve", "--model", str(model), "--text", str(text), "--image", str(image)]
    args += ["--labels", str(labels), "--split", str(split), "--out-ap", str(tmp_path / "ap.tsv")]
    code = main(args)
    assert code == 0
    assert "mean AP 1.0000 over 2 queries" in capsys.readouterr().out
    assert (tmp_path / "ap.tsv").read_text().splitlines()[1:] == ["q0\t1.000000", "q1\t1.000000"]


def test_eval_classify_with_lsi(synth_files, capsys):
    code = main(
        ["eval-classify", "--lsi", "2", "--split", str(synth_files["split"])]
        + _corpus_flags(synth_files, labels=True)
    )
    assert code == 0
    assert capsys.readouterr().out.startswith("accuracy ")


def test_oracle_check_passes(capsys):
    assert main(["oracle-check", "--draws", "2"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_annotate_writes_ranked_words(synth_files, model_file, tmp_path):
    out = tmp_path / "words.tsv"
    args = ["annotate", "--model", str(model_file), "--images", str(synth_files["image"])]
    args += ["--vocab", str(synth_files["text"]), "--top-n", "3", "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 40
    for line in lines:
        doc_id, words = line.split("\t")
        assert doc_id.startswith("doc")
        assert len(words.split()) == 3


def test_eval_annotation_with_ablation(synth_files, model_file, tmp_path, capsys):
    out = tmp_path / "annotation.tsv"
    args = ["eval-annotation", "--model", str(model_file)] + _corpus_flags(synth_files)
    args += ["--split", str(synth_files["split"]), "--top-n", "1", "3", "--ablation"]
    capsys.readouterr()
    assert main(args + ["--out", str(out)]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert [line.split("\t")[:2] for line in printed] == [
        ["trained", "top 1"],
        ["trained", "top 3"],
        ["U=0", "top 1"],
        ["U=0", "top 3"],
    ]
    assert out.read_text().splitlines()[0] == "model\ttop_n\tap"


def test_topics_report_has_one_block_per_aspect(synth_files, model_file, tmp_path):
    out = tmp_path / "topics.txt"
    args = ["topics", "--model", str(model_file)] + _corpus_flags(synth_files)
    args += ["--top-words", "3", "--top-docs", "2", "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert [line for line in lines if line.startswith("aspect")] == ["aspect 0", "aspect 1"]
    assert len(lines) == 6


def test_lsi_writes_latents(synth_files, tmp_path):
    out = tmp_path / "lsi.tsv"
    args = ["lsi"] + _corpus_flags(synth_files) + ["--split", str(synth_files["split"])]
    assert main(args + ["--dims", "2", "--out", str(out)]) == 0
    assert load_latents(out).rows.shape == (40, 2)


def test_sweep_writes_one_row_per_method(synth_files, tmp_path):
    out = tmp_path / "sweep.tsv"
    args = ["sweep"] + _corpus_flags(synth_files, labels=True)
    args += ["--split", str(synth_files["split"]), "--dims", "2", "--top-n", "3"]
    args += ["--epochs", "1", "--batch-size", "20", "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert [line.split("\t")[0] for line in lines] == ["method", "baseline", "dwh", "lsi"]


def test_learning_curve_writes_sampled_epochs(synth_files, tmp_path):
    out = tmp_path / "curve.tsv"
    args = ["learning-curve"] + _corpus_flags(synth_files, labels=True)
    args += ["--split", str(synth_files["split"]), "--dims", "2", "--every", "1"]
    args += ["--epochs", "2", "--batch-size", "20", "--train-only", "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epoch\tmean_ap"
    assert [line.split("\t")[0] for line in lines[1:]] == ["1", "2"]


# =====================================================
# Exit codes
# =====================================================


def test_unknown_flag_is_a_usage_error(capsys):
    assert main(["train", "--bogus"]) == 1
    assert "usage error" in capsys.readouterr().err


def test_missing_subcommand_is_a_usage_error():
    assert main([]) == 1


@pytest.mark.parametrize(
    "args, flag",
    [
        (["annotate", "--model", "m.dwh", "--images", "i.tsv", "--top-n", "0"], "--top-n"),
        (
            ["eval-annotation", "--model", "m.dwh", "--text", "t", "--image", "i", "--top-n", "0"],
            "--top-n",
        ),
        (
            ["sweep", "--text", "t", "--image", "i", "--labels", "l", "--split", "s"]
            + ["--dims", "0", "--out", "o"],
            "--dims",
        ),
        (
            ["learning-curve", "--text", "t", "--image", "i", "--labels", "l", "--split", "s"]
            + ["--dims", "2", "--every", "0", "--out", "o"],
            "--every",
        ),
    ],
)
def test_non_positive_counts_are_usage_errors(args, flag, capsys):
    assert main(args) == 1
    assert f"{flag} must be at least 1" in capsys.readouterr().err


def test_annotate_top_n_zero_on_real_files(synth_files, model_file, capsys):
    args = ["annotate", "--model", str(model_file), "--images", str(synth_files["image"])]
    assert main(args + ["--top-n", "0"]) == 1
    assert "usage error" in capsys.readouterr().err


def test_missing_file_is_a_runtime_error(tmp_path, capsys):
    args = ["project", "--model", str(tmp_path / "nope.dwh"), "--text", "t", "--image", "i"]
    code = main(args + ["--out", str(tmp_path / "out.tsv")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "Dual-wing harmonium toolkit" in capsys.readouterr().out
