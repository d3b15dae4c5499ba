"""Smoke tests for the _smn extension module and the smn CLI.

Run through ctest with PYTHONPATH pointing at the built extension and
SMN_CLI at the CLI binary.
"""

import json
import math
import os
import shutil
import subprocess
import sys
import tempfile

import _smn as smn


def approx(a, b, eps=1e-9):
    return abs(a - b) <= eps


def check_tokenize():
    assert smn.tokenize("how are you") == ["how", "are", "you"]
    assert smn.tokenize("") == []
    assert smn.tokenize("a  b\tc") == ["a", "b", "c"]


def check_vocabulary():
    vocab = smn.Vocabulary.build(["a a b", "b c"], min_count=1)
    assert len(vocab) == 5  # pad, unk + a, b, c
    assert vocab.id("a") != vocab.id("b")
    assert vocab.contains("c")
    assert not vocab.contains("zzz")
    assert vocab.token(vocab.id("a")) == "a"


def check_metrics():
    # one group, positive ranked first; another with the positive second
    report = smn.metrics([[(0.9, 1), (0.1, 0)], [(0.2, 1), (0.7, 0)]])
    assert approx(report["P@1"], 0.5)
    assert approx(report["MRR"], 0.75)
    assert approx(report["MAP"], 0.75)
    assert report["groups_evaluated"] == 2


def check_index():
    index = smn.Index.build(["hello world", "drum class here", "another quiet line"])
    assert index.doc_count == 3
    hits = index.retrieve(["drum"])
    assert [h[0] for h in hits] == [1]
    assert hits[0][1] > 0
    # tf(drum) = 2 at idf ln(3) beats tf(world) = 1 at idf ln(3)
    keywords = index.keywords([["drum", "drum", "world"]], count=1)
    assert keywords[0][0] == "drum"
    assert approx(keywords[0][1], 2 * math.log(3))


def check_model_training(tmpdir):
    train_path = os.path.join(tmpdir, "train.txt")
    val_path = os.path.join(tmpdir, "val.txt")
    test_path = os.path.join(tmpdir, "test.txt")
    result = smn.synth(train_path, val_path, test_path,
                       topics=10, fillers=10, turns=3,
                       train_contexts=60, val_contexts=10, test_groups=20, seed=3)
    assert result["self_check"]
    assert result["test_lines"] == 20 * 10

    model = smn.train(train=train_path, val=val_path,
                      d=8, m=8, q=4, max_len=8, max_turns=3,
                      feature_maps=2, pool=2, batch_size=16,
                      max_epochs=4, seed=5)
    cfg = model.config()
    assert cfg["q"] == 4 and cfg["readout"] == "last"

    context = ["topic01 filler02 filler03", "filler04 filler05"]
    g = model.score(context, "topic01 filler06")
    assert 0.0 < g < 1.0
    assert g == model.score(context, "topic01 filler06")  # deterministic

    scores = model.score_many(context, ["topic01 a", "topic05 b"])
    assert len(scores) == 2

    ckpt = os.path.join(tmpdir, "model.bin")
    model.save(ckpt)
    reloaded = smn.Model.load(ckpt)
    assert reloaded.score(context, "topic01 filler06") == g

    report = smn.evaluate(model, test_path)
    assert "MAP" in report and 0.0 <= report["MAP"] <= 1.0
    assert report["groups_evaluated"] == 20

    # respond: rerank over a small response repository
    index = smn.Index.build(["topic01 filler01", "topic02 filler02", "filler03 filler04"])
    out = smn.respond(model, index, ["topic01 filler05", "filler06"])
    assert out["has_candidates"]
    assert out["doc"] in (0, 1, 2)
    assert len(out["ranked"]) >= 1
    return ckpt, test_path


def run_cli(cli, args, stdin_text=None, cwd=None):
    proc = subprocess.run([cli] + args, input=stdin_text, capture_output=True,
                          text=True, cwd=cwd, timeout=600)
    return proc


def check_cli(tmpdir):
    cli = os.environ.get("SMN_CLI")
    if not cli or not os.path.exists(cli):
        raise AssertionError("SMN_CLI does not point at the smn binary")

    train_path = os.path.join(tmpdir, "cli_train.txt")
    val_path = os.path.join(tmpdir, "cli_val.txt")
    test_path = os.path.join(tmpdir, "cli_test.txt")

    synth = run_cli(cli, ["synth", "--out-train", train_path, "--out-val", val_path,
                          "--out-test", test_path, "--topics", "10", "--fillers", "10",
                          "--turns", "3", "--train-contexts", "80", "--val-contexts", "10",
                          "--groups", "25", "--seed", "9"])
    assert synth.returncode == 0, synth.stderr
    assert "self-check pass" in synth.stdout

    ckpt = os.path.join(tmpdir, "cli_model.bin")
    train = run_cli(cli, ["train", "--train", train_path, "--val", val_path,
                          "--checkpoint", ckpt, "--d", "8", "--m", "8", "--q", "4",
                          "--max-len", "8", "--max-turns", "3", "--feature-maps", "2",
                          "--pool", "2", "--batch-size", "16", "--max-epochs", "6",
                          "--patience", "3", "--seed", "5"])
    assert train.returncode == 0, train.stderr
    assert os.path.exists(ckpt)
    with open(ckpt + ".log") as fh:
        log = fh.read()
    assert "best step=" in log and "val_loss=" in log

    ev = run_cli(cli, ["--json", "eval", ckpt, test_path])
    assert ev.returncode == 0, ev.stderr
    report = json.loads(ev.stdout)
    assert "MAP" in report and "R10@1" in report and "R2@1" in report
    assert report["groups_evaluated"] == 25

    ev_subset = run_cli(cli, ["--json", "eval", ckpt, test_path, "--metrics", "map,mrr"])
    subset = json.loads(ev_subset.stdout)
    assert "MAP" in subset and "P@1" not in subset

    # index: determinism and summary output
    corpus = os.path.join(tmpdir, "responses.txt")
    with open(corpus, "w") as fh:
        for topic in range(10):
            fh.write(f"topic{topic:02d} filler{topic:02d} reply\n")
    idx1 = os.path.join(tmpdir, "idx1.bin")
    idx2 = os.path.join(tmpdir, "idx2.bin")
    out1 = run_cli(cli, ["index", corpus, idx1])
    out2 = run_cli(cli, ["index", corpus, idx2])
    assert out1.returncode == 0 and "indexed 10 responses" in out1.stdout
    with open(idx1, "rb") as fh:
        b1 = fh.read()
    with open(idx2, "rb") as fh:
        b2 = fh.read()
    assert b1 == b2, "index files are not byte-identical"

    # chat: a topic word planted early should appear via retrieval + rerank
    chat_input = "topic03 filler01 filler02\n:trace\n:quit\n"
    chat = run_cli(cli, ["chat", ckpt, idx1], stdin_text=chat_input)
    assert chat.returncode == 0, chat.stderr
    lines = chat.stdout.strip().splitlines()
    assert lines, "chat produced no output"
    assert "keywords:" in chat.stdout and "query:" in chat.stdout

    # :trace scores equal a standalone respond() on the same context
    model = smn.Model.load(ckpt)
    index = smn.Index.load(idx1)
    standalone = smn.respond(model, index, ["topic03 filler01 filler02"])
    traced = [float(line.split("g=")[1].split()[0])
              for line in lines if line.startswith("#")]
    assert traced, "no :trace candidate lines"
    expected = [g for (_, _, g, _) in standalone["ranked"]]
    assert len(traced) == len(expected)
    for got, want in zip(traced, expected):
        assert approx(got, want, 1e-4)

    # chat fallback marker when nothing matches lexically
    fallback = run_cli(cli, ["chat", ckpt, idx1], stdin_text="zzqq unknown words\n:quit\n")
    assert fallback.returncode == 0
    assert "[no-candidates]" in fallback.stdout

    # inspect on a single-example file
    example_path = os.path.join(tmpdir, "one.txt")
    with open(example_path, "w") as fh:
        fh.write("1\ttopic01 filler01\tfiller02 filler03\ttopic01 filler04\n")
    inspect_dir = os.path.join(tmpdir, "inspect_out")
    inspect = run_cli(cli, ["inspect", ckpt, example_path, inspect_dir])
    assert inspect.returncode == 0, inspect.stderr
    files = sorted(os.listdir(inspect_dir))
    assert "gates.json" in files and "trace.json" in files
    # 2-turn example with max_turns 3: slots 1 and 2 hold the real turns
    assert "slot01_M1.csv" in files and "slot02_M2.csv" in files
    assert "slot00_M1.csv" not in files
    with open(os.path.join(inspect_dir, "gates.json")) as fh:
        gates = json.load(fh)
    assert len(gates["update_gate_mean"]) == 3
    assert all(0.0 < g < 1.0 for g in gates["update_gate_mean"])
    with open(os.path.join(inspect_dir, "slot01_M1.csv")) as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) == 8 and len(rows[0].split(",")) == 8

    # multi-example file must be rejected with exit code 2
    bad = run_cli(cli, ["inspect", ckpt, train_path, inspect_dir])
    assert bad.returncode == 2

    # eval with a bogus checkpoint must fail cleanly
    missing = run_cli(cli, ["eval", os.path.join(tmpdir, "nope.bin"), test_path])
    assert missing.returncode == 2

    # identical eval runs emit identical JSON bytes
    again = run_cli(cli, ["--json", "eval", ckpt, test_path])
    assert again.stdout == ev.stdout

    # synth is deterministic under a fixed seed
    resynth = run_cli(cli, ["synth", "--out-train", train_path + ".2", "--out-val",
                            val_path + ".2", "--out-test", test_path + ".2",
                            "--topics", "10", "--fillers", "10", "--turns", "3",
                            "--train-contexts", "80", "--val-contexts", "10",
                            "--groups", "25", "--seed", "9"])
    assert resynth.returncode == 0
    with open(train_path) as fh:
        first = fh.read()
    with open(train_path + ".2") as fh:
        second = fh.read()
    assert first == second

    # readout/channel flags land in the checkpoint header
    static_ckpt = os.path.join(tmpdir, "static_model.bin")
    static_train = run_cli(cli, ["train", "--train", train_path, "--val", val_path,
                                 "--checkpoint", static_ckpt, "--readout", "static",
                                 "--channels", "m1", "--d", "8", "--m", "8", "--q", "4",
                                 "--max-len", "8", "--max-turns", "3", "--feature-maps", "2",
                                 "--pool", "2", "--batch-size", "16", "--max-epochs", "1",
                                 "--seed", "5"])
    assert static_train.returncode == 0, static_train.stderr
    static_cfg = smn.Model.load(static_ckpt).config()
    assert static_cfg["readout"] == "static"
    assert static_cfg["channels"] == "m1"

    # a chat session longer than max_turns keeps rolling without error
    long_input = "".join(f"topic0{i % 4} filler0{i % 4}\n" for i in range(6)) + ":quit\n"
    long_chat = run_cli(cli, ["chat", ckpt, idx1], stdin_text=long_input)
    assert long_chat.returncode == 0
    assert len(long_chat.stdout.strip().splitlines()) == 6


def main():
    tmpdir = tempfile.mkdtemp(prefix="smn_smoke_")
    try:
        check_tokenize()
        check_vocabulary()
        check_metrics()
        check_index()
        check_model_training(tmpdir)
        check_cli(tmpdir)
    finally:
        shutil.rmtree(tmpdir, ignore_errors=True)
    print("python smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
