import dataclasses
import json
import struct

import numpy as np
import pytest

import smf_fixtures as smf
from conftest import random_notes
from midillm.cli import run_cli
from midillm.codec import TokenSequence, encode, quantize
from midillm.midi import Note, NoteSeq, load_notes, write_smf
from midillm.tokenfile import read_tokens, write_tokens
from midillm.vocab import VocabConfig


@pytest.fixture
def cli(config_file, capsys):
    """Run a command with the test configuration and return (code, stdout, stderr)"""
    def run(*argv):
        code = run_cli(["--config", config_file, *argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err
    return run


def fields(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


def write_emb(path, data):
    data = np.asarray(data, dtype=np.float32)
    with open(path, 'wb') as f:
        f.write(b'EMB1' + struct.pack('<III', data.shape[0], data.shape[1], 0))
        f.write(data.tobytes())


class TestParse:

    def test_prints_notes(self, cli, tmp_path):
        path = tmp_path / "one.mid"
        path.write_bytes(smf.single_note())
        code, out, _ = cli("parse", str(path))
        assert code == 0
        assert out == "0.000000 0.500000 0 60\n"

    def test_malformed_file(self, cli, tmp_path):
        path = tmp_path / "bad.mid"
        path.write_bytes(b"RIFF\x00\x00\x00\x06")
        code, out, err = cli("parse", str(path))
        assert code == 1
        assert out == ""
        assert "MalformedHeader" in err.strip().splitlines()[-1]

    def test_missing_file(self, cli, tmp_path):
        code, _, err = cli("parse", str(tmp_path / "nothing.mid"))
        assert code == 1
        assert err.strip()


class TestConfigFile:

    def test_broken_config_exits_with_error(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text('{"jobs": 2,}')
        code = run_cli(["--config", str(path), "inspect", str(tmp_path / "x.amtk")])
        assert code == 1
        assert "ConfigError" in capsys.readouterr().err
        assert path.read_text() == '{"jobs": 2,}'


class TestUsage:

    def test_unknown_command(self, cli):
        assert cli("transmogrify")[0] == 2

    def test_missing_output(self, cli, tmp_path):
        assert cli("tokenize", str(tmp_path / "x.mid"))[0] == 2

    def test_help(self, cli):
        assert cli("--help")[0] == 0

    def test_model_flags_exclusive(self, cli, tmp_path):
        assert cli("generate", "--uniform", "--model", "m.ngrm", "-o", str(tmp_path / "o.mid"))[0] == 2


class TestTokenRoundTrip:

    def test_tokenize_detokenize(self, cli, tmp_path):
        notes = random_notes(np.random.default_rng(3), 40, instruments=(0, 24))
        # distinct pitches keep FIFO matching unambiguous
        notes = NoteSeq.sorted(dataclasses.replace(n, pitch=30 + i) for i, n in enumerate(notes))
        src, tokens, dst = tmp_path / "x.mid", tmp_path / "x.amtk", tmp_path / "y.mid"
        src.write_bytes(write_smf(notes))

        assert cli("tokenize", str(src), "-o", str(tokens))[0] == 0
        assert cli("detokenize", str(tokens), "-o", str(dst))[0] == 0

        expected = sorted((quantize(n).to_note() for n in load_notes(str(src))), key=lambda n: n.pitch)
        restored = sorted(load_notes(str(dst)), key=lambda n: n.pitch)
        assert len(restored) == len(expected)
        for a, b in zip(restored, expected):
            assert (a.instrument, a.pitch) == (b.instrument, b.pitch)
            assert a.onset == pytest.approx(b.onset, abs=1 / 960 + 1e-9)
            assert a.duration == pytest.approx(b.duration, abs=2 / 960 + 1e-9)

    def test_long_file_writes_segments(self, cli, tmp_path):
        notes = NoteSeq.sorted(Note(t, 1.0, 0, 60 + k) for k, t in enumerate((10.0, 150.0, 250.0)))
        src = tmp_path / "long.mid"
        src.write_bytes(write_smf(notes))
        assert cli("tokenize", str(src), "-o", str(tmp_path / "long.amtk"))[0] == 0
        assert (tmp_path / "long.amtk").exists()
        assert (tmp_path / "long.seg001.amtk").exists()
        assert (tmp_path / "long.seg002.amtk").exists()


class TestValidateAndInspect:

    def tokens(self, tmp_path, ids):
        path = str(tmp_path / "t.amtk")
        write_tokens(TokenSequence(ids, VocabConfig()), path)
        return path

    def test_valid(self, cli, tmp_path, make_notes):
        seq = encode(make_notes(np.random.default_rng(0), 12), VocabConfig())
        code, out, _ = cli("validate", self.tokens(tmp_path, seq.ids))
        assert code == 0
        assert fields(out) == {"ok": "true", "violations": "0"}

    def test_truncated(self, cli, tmp_path, make_notes):
        seq = encode(make_notes(np.random.default_rng(0), 12), VocabConfig())
        code, out, err = cli("validate", self.tokens(tmp_path, seq.ids[:-1]))
        assert code == 1
        assert fields(out)["ok"] == "false"
        assert "violation=DanglingTriple@33" in out
        assert "DanglingTriple" in err

    def test_inspect(self, cli, tmp_path, cfg):
        ids = [65, cfg.separator_id]
        code, out, _ = cli("inspect", self.tokens(tmp_path, ids))
        assert code == 0
        lines = out.splitlines()
        assert len(lines) == 2
        assert lines[1].startswith(f"1\t{cfg.separator_id}\t")

    def test_detokenize_lenient(self, cli, tmp_path, cfg):
        ids = [129276, 129276, 138268, 139316]
        path = self.tokens(tmp_path, ids)
        assert cli("detokenize", path, "-o", str(tmp_path / "s.mid"))[0] == 1
        assert cli("detokenize", path, "--lenient", "-o", str(tmp_path / "l.mid"))[0] == 0
        assert len(load_notes(str(tmp_path / "l.mid"))) == 1


class TestGenerate:

    def test_uniform_deterministic(self, cli, tmp_path):
        a, b = tmp_path / "a.mid", tmp_path / "b.mid"
        code, out, _ = cli("generate", "--uniform", "--max-new", "30", "--seed", "7", "-o", str(a))
        assert code == 0
        assert cli("generate", "--uniform", "--max-new", "30", "--seed", "7", "-o", str(b))[0] == 0
        assert a.read_bytes() == b.read_bytes()
        assert int(fields(out)["tokens"]) <= 30
        assert len(load_notes(str(a))) == int(fields(out)["notes"])

    def test_tokens_out_validates(self, cli, tmp_path):
        tokens = tmp_path / "g.amtk"
        code, _, _ = cli(
            "generate", "--uniform", "--prompt", "jazz", "--max-new", "40", "--seed", "2",
            "--tokens-out", str(tokens), "-o", str(tmp_path / "g.mid"),
        )
        assert code == 0
        ids = read_tokens(str(tokens), VocabConfig()).ids
        assert ids[:5] == list(b"jazz") + [128000]
        assert cli("validate", str(tokens))[0] == 0

    def test_needs_a_model(self, cli, tmp_path):
        code, _, err = cli("generate", "-o", str(tmp_path / "o.mid"))
        assert code == 1
        assert "--model" in err

    def test_trained_model(self, cli, tmp_path, cfg, make_notes):
        rng = np.random.default_rng(8)
        paths = []
        for i in range(3):
            path = str(tmp_path / f"c{i}.amtk")
            write_tokens(encode(make_notes(rng, 30), cfg), path)
            paths.append(path)
        model = str(tmp_path / "m.ngrm")
        assert cli("train-ngram", "--order", "3", *paths, "-o", model)[0] == 0
        assert open(model, 'rb').read()[:4] == b'NGRM'

        tokens = tmp_path / "n.amtk"
        code, out, _ = cli(
            "generate", "--model", model, "--max-new", "45", "--seed", "1",
            "--tokens-out", str(tokens), "-o", str(tmp_path / "n.mid"),
        )
        assert code == 0
        assert cli("validate", str(tokens))[0] == 0


class TestExpandEmbeddings:

    def test_random_rows(self, cli, tmp_path):
        src, dst = str(tmp_path / "llm.emb"), str(tmp_path / "out.emb")
        write_emb(src, np.ones((5, 4)))
        assert cli("expand-embeddings", src, "--seed", "3", "-o", dst)[0] == 0
        raw = open(dst, 'rb').read()
        rows, dim, _ = struct.unpack('<III', raw[4:16])
        assert (rows, dim) == (5 + 55024, 4)
        data = np.frombuffer(raw[16:], dtype='<f4').reshape(rows, dim)
        assert np.all(data[:5] == 1.0)

    def test_given_rows(self, cli, tmp_path):
        src, amt, dst = str(tmp_path / "llm.emb"), str(tmp_path / "amt.emb"), str(tmp_path / "out.emb")
        write_emb(src, np.zeros((3, 2)))
        write_emb(amt, np.full((55024, 2), 0.5))
        assert cli("expand-embeddings", src, amt, "-o", dst)[0] == 0
        data = np.frombuffer(open(dst, 'rb').read()[16:], dtype='<f4').reshape(-1, 2)
        assert data.shape == (3 + 55024, 2)
        assert np.all(data[3:] == 0.5)

    def test_dim_mismatch(self, cli, tmp_path):
        src, amt = str(tmp_path / "llm.emb"), str(tmp_path / "amt.emb")
        write_emb(src, np.zeros((3, 2)))
        write_emb(amt, np.zeros((55024, 3)))
        code, _, err = cli("expand-embeddings", src, amt, "-o", str(tmp_path / "o.emb"))
        assert code == 1
        assert "DimMismatch" in err


@pytest.fixture
def manifest(tmp_path):
    rng = np.random.default_rng(12)
    records = []
    for i in range(3):
        notes = random_notes(rng, 40)
        (tmp_path / f"s{i}.mid").write_bytes(write_smf(notes))
        records.append({"midi_path": f"s{i}.mid", "caption": f"piece {i}", "split": "finetune"})
        records.append({"midi_path": f"p{i}.mid", "split": "pretrain"})
        (tmp_path / f"p{i}.mid").write_bytes(write_smf(notes))
    path = tmp_path / "manifest.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in records))
    return str(path)


class TestDatasetCommands:

    def test_pack(self, cli, tmp_path, manifest):
        out_dir = tmp_path / "packed"
        code, out, _ = cli("pack", "--manifest", manifest, "--seqlen", "64", "-o", str(out_dir))
        assert code == 0
        result = fields(out)
        assert result["seqlen"] == "64"
        assert int(result["sequences"]) > 0

    def test_augment_is_reproducible(self, cli, tmp_path, manifest):
        first, second = tmp_path / "a", tmp_path / "b"
        code, out, _ = cli("augment", "--manifest", manifest, "--seed", "4", "-o", str(first))
        assert code == 0
        assert fields(out) == {"finetune": "3", "infill": "6"}
        assert cli("augment", "--manifest", manifest, "--seed", "4", "--jobs", "3", "-o", str(second))[0] == 0
        for name in sorted(p.name for p in first.iterdir()):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_augment_without_infill(self, cli, tmp_path, manifest):
        code, out, _ = cli("augment", "--manifest", manifest, "--no-infill", "-o", str(tmp_path / "c"))
        assert code == 0
        assert fields(out) == {"finetune": "3", "infill": "0"}

    def test_bad_manifest(self, cli, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("[1, 2]\n")
        assert cli("pack", "--manifest", str(path), "-o", str(tmp_path / "o"))[0] == 1


class TestBench:

    def test_text_report(self, cli):
        code, out, _ = cli("bench", "--uniform", "--batch", "2", "--max-new", "30", "--seed", "5")
        assert code == 0
        report = fields(out)
        assert set(report) == {"wall_clock_s", "output_music_s", "rtf", "tokens_per_s", "batch_size"}
        assert report["batch_size"] == "2"
        wall, music = float(report["wall_clock_s"]), float(report["output_music_s"])
        assert wall > 0
        assert float(report["rtf"]) == music / wall

    def test_json_report(self, cli):
        code, out, _ = cli("bench", "--uniform", "--runs", "2", "--max-new", "12", "--json")
        assert code == 0
        report = json.loads(out)
        assert list(report) == sorted(report)
        assert report["rtf"] == report["output_music_s"] / report["wall_clock_s"]
