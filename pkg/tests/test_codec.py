import struct

import numpy as np
import pytest

import smf_fixtures as smf
from conftest import random_notes
from midillm.codec import (
    QuantNote, TokenSequence, quantize, segment, encode, decode, interleave_infill, validate,
    tokenize_midi, midi_portion, music_duration,
    CYCLE_BREAK, DANGLING_TRIPLE, RANGE_ERROR, ONSET_REGRESSION,
)
from midillm.errors import OnsetOutOfRange, UnsortedNotes, DecodeError, FileFormatError, OutOfRange
from midillm.midi import Note, NoteSeq, parse_smf, extract_notes
from midillm.tokenfile import write_tokens, read_tokens
from midillm.vocab import EventKind, global_event


def quantized(notes):
    """Notes as decode returns them after quantization"""
    return NoteSeq.sorted(quantize(n).to_note() for n in notes)


class TestQuantize:

    def test_single_note_bins(self):
        assert quantize(Note(10.2, 0.120, 0, 60)) == QuantNote(1020, 12, 0, 60)

    def test_duration_clipped_high(self):
        assert quantize(Note(0.0, 15.0, 0, 60)).duration_bin == 999

    def test_duration_floor(self):
        assert quantize(Note(0.0, 0.001, 0, 60)).duration_bin == 1

    def test_half_up(self):
        assert quantize(Note(0.125, 0.025, 0, 60)).onset_bin == 13

    def test_onset_out_of_range(self):
        with pytest.raises(OnsetOutOfRange):
            quantize(Note(100.0, 1.0, 0, 60))

    def test_onset_just_below_limit(self):
        assert quantize(Note(99.999, 1.0, 0, 60)).onset_bin == 9999


class TestSegment:

    def test_single_window(self):
        notes = NoteSeq.sorted([Note(1.0, 1.0, 0, 60), Note(50.0, 1.0, 0, 62)])
        assert segment(notes) == [notes]

    def test_rebased_windows(self):
        notes = NoteSeq.sorted(Note(t, 1.0, 0, 60) for t in (10.0, 150.0, 250.0))
        windows = segment(notes)
        assert len(windows) == 3
        assert [w[0].onset for w in windows] == [10.0, 50.0, 50.0]

    def test_empty(self):
        assert segment(NoteSeq()) == []

    def test_empty_intermediate_window_kept(self):
        notes = NoteSeq.sorted(Note(t, 1.0, 0, 60) for t in (10.0, 250.0))
        windows = segment(notes)
        assert [len(w) for w in windows] == [1, 0, 1]

    def test_partition(self, rng):
        notes = random_notes(rng, 200, span=450.0)
        restored = [n.shifted(k * 100.0) for k, w in enumerate(segment(notes)) for n in w]
        assert len(restored) == len(notes)
        for a, b in zip(sorted(restored, key=lambda n: n.sort_key), notes):
            assert a.onset == pytest.approx(b.onset)
            assert (a.instrument, a.pitch, a.duration) == (b.instrument, b.pitch, b.duration)


class TestEncodeDecode:

    def test_empty(self, cfg):
        assert encode(NoteSeq(), cfg).ids == []

    def test_single_note_ids(self, cfg):
        assert encode(NoteSeq([Note(10.2, 0.120, 0, 60)]), cfg).ids == [129276, 138268, 139316]

    def test_unsorted_rejected(self, cfg):
        with pytest.raises(UnsortedNotes):
            encode(NoteSeq([Note(1.0, 0.5, 0, 60), Note(0.5, 0.5, 0, 60)]), cfg)

    def test_length_law(self, cfg, rng):
        notes = random_notes(rng, 57)
        assert len(encode(notes, cfg)) == 3 * 57

    def test_round_trip(self, cfg):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            notes = random_notes(rng, int(rng.integers(0, 501)), span=100.0)
            assert decode(encode(notes, cfg)) == quantized(notes)

    @pytest.mark.parametrize("fixture", [
        smf.single_note, smf.running_status_velocity_zero, smf.tempo_change, smf.drums_and_program,
        smf.overlapping_same_pitch, smf.unmatched_note_on, smf.missing_end_of_track,
        smf.setup_track_program,
    ])
    def test_round_trip_midi_fixtures(self, cfg, fixture):
        notes = extract_notes(parse_smf(fixture()))
        assert len(notes) > 0
        assert decode(encode(notes, cfg)) == quantized(notes)

    def test_quantization_error(self, cfg, rng):
        notes = NoteSeq.sorted(
            Note(float(rng.uniform(0, 99.9)), float(rng.uniform(0.01, 9.9)), 0, pitch)
            for pitch in range(100)
        )
        decoded = decode(encode(notes, cfg))
        by_pitch = lambda n: n.pitch  # noqa: E731
        for a, b in zip(sorted(notes, key=by_pitch), sorted(decoded, key=by_pitch)):
            assert abs(a.onset - b.onset) <= 0.005 + 1e-9
            assert abs(a.duration - b.duration) <= 0.005 + 1e-9

    def test_dangling_strict(self, cfg):
        with pytest.raises(DecodeError) as info:
            decode(TokenSequence([129276], cfg))
        assert info.value.kind == DANGLING_TRIPLE

    def test_dangling_lenient(self, cfg):
        notes = decode(TokenSequence([129276], cfg), strict=False)
        assert len(notes) == 0
        assert len(notes.warnings) == 1

    def test_cycle_break_strict(self, cfg):
        with pytest.raises(DecodeError) as info:
            decode(TokenSequence([138268, 129276, 138268, 139316], cfg))
        assert info.value.kind == CYCLE_BREAK
        assert info.value.position == 0

    def test_lenient_skips_to_next_onset(self, cfg):
        ids = [138268, 129276, 138268, 139316]
        notes = decode(TokenSequence(ids, cfg), strict=False)
        assert list(notes) == [Note(10.2, 0.12, 0, 60)]

    def test_text_id_is_range_error(self, cfg):
        with pytest.raises(DecodeError) as info:
            decode(TokenSequence([65], cfg))
        assert info.value.kind == RANGE_ERROR

    def test_anticipated_decode_like_normal(self, cfg):
        future = NoteSeq([Note(20.0, 1.0, 0, 64)])
        seq = interleave_infill(NoteSeq(), future, 5.0, cfg)
        assert list(decode(seq)) == [Note(20.0, 1.0, 0, 64)]

    def test_token_sequence_range(self, cfg):
        with pytest.raises(OutOfRange):
            TokenSequence([cfg.total_size], cfg)


class TestInterleave:

    def test_empty_future_equals_encode(self, cfg, rng):
        notes = random_notes(rng, 30)
        assert interleave_infill(notes, NoteSeq(), 5.0, cfg).ids == encode(notes, cfg).ids

    def test_placement(self, cfg):
        middle = NoteSeq.sorted(Note(t, 0.5, 0, 60) for t in (1.0, 6.0, 9.0))
        future = NoteSeq([Note(12.0, 0.5, 0, 72)])
        ids = interleave_infill(middle, future, 5.0, cfg).ids
        events = [global_event(i, cfg) for i in ids[::3]]
        assert [(e.value, e.anticipated) for e in events] == [
            (100, False), (600, False), (1200, True), (900, False),
        ]

    def test_ties_put_anticipated_first(self, cfg):
        middle = NoteSeq([Note(7.0, 0.5, 0, 60)])
        future = NoteSeq([Note(12.0, 0.5, 0, 72)])
        first = global_event(interleave_infill(middle, future, 5.0, cfg).ids[0], cfg)
        assert first.anticipated

    def test_only_future(self, cfg):
        future = NoteSeq.sorted(Note(t, 0.5, 0, 60) for t in (3.0, 1.0, 2.0))
        ids = interleave_infill(NoteSeq(), future, 5.0, cfg).ids
        onsets = [global_event(i, cfg) for i in ids[::3]]
        assert [e.value for e in onsets] == [100, 200, 300]
        assert all(e.anticipated for e in onsets)

    def test_always_validates(self, cfg):
        rng = np.random.default_rng(5)
        for _ in range(30):
            notes = random_notes(rng, int(rng.integers(1, 60)))
            boundary = float(rng.uniform(0, 90))
            middle = NoteSeq([n for n in notes if n.onset < boundary])
            future = NoteSeq([n for n in notes if n.onset >= boundary])
            seq = interleave_infill(middle, future, float(rng.uniform(0, 10)), cfg)
            assert len(seq) == 3 * len(notes)
            assert validate(seq).ok


class TestValidate:

    def test_encoded_is_ok(self, cfg, rng):
        assert validate(encode(random_notes(rng, 40), cfg)).ok

    def test_onset_regression(self, cfg):
        a = encode(NoteSeq([Note(10.2, 0.12, 0, 60)]), cfg).ids
        b = encode(NoteSeq([Note(5.0, 0.12, 0, 60)]), cfg).ids
        report = validate(TokenSequence(a + b, cfg))
        assert [(v.position, v.kind) for v in report.violations] == [(3, ONSET_REGRESSION)]

    def test_dangling(self, cfg):
        ids = encode(NoteSeq([Note(1.0, 0.5, 0, 60)]), cfg).ids + [129276]
        report = validate(TokenSequence(ids, cfg))
        assert [(v.position, v.kind) for v in report.violations] == [(3, DANGLING_TRIPLE)]
        assert report.summary() == "DanglingTriple at position 3"

    def test_text_ids_flagged(self, cfg):
        report = validate(TokenSequence([5], cfg))
        assert report.violations[0].kind == RANGE_ERROR

    def test_mixed_flavor_triple(self, cfg):
        normal = encode(NoteSeq([Note(1.0, 0.5, 0, 60)]), cfg).ids
        ids = [normal[0], normal[1] + 27512, normal[2]]
        assert not validate(TokenSequence(ids, cfg)).ok

    def test_empty_is_ok(self, cfg):
        assert validate(TokenSequence([], cfg)).summary() == "ok"


class TestHelpers:

    def test_tokenize_midi_per_window(self, cfg):
        notes = NoteSeq.sorted(Note(t, 1.0, 0, 60) for t in (10.0, 150.0))
        docs = tokenize_midi(notes, cfg)
        assert [len(d) for d in docs] == [3, 3]
        assert global_event(docs[1].ids[0], cfg).value == 5000

    def test_midi_portion(self, cfg):
        body = encode(NoteSeq([Note(1.0, 0.5, 0, 60)]), cfg).ids
        assert midi_portion([120, 121, cfg.separator_id] + body + [cfg.eos_id], cfg) == body
        assert midi_portion([120] + body, cfg) == body

    def test_music_duration(self):
        notes = NoteSeq.sorted([Note(1.0, 5.0, 0, 60), Note(4.0, 0.5, 0, 62)])
        assert music_duration(notes) == 4.5
        assert music_duration(NoteSeq()) == 0.0


class TestTokenFile:

    def test_round_trip(self, tmp_path, cfg, rng):
        seq = encode(random_notes(rng, 10), cfg)
        path = str(tmp_path / "x.amtk")
        write_tokens(seq, path)
        raw = open(path, 'rb').read()
        assert raw[:4] == b'AMTK'
        assert struct.unpack('<IIIQ', raw[4:24]) == (1, 128256, 55024, 30)
        assert len(raw) == 24 + 4 * 30
        assert read_tokens(path, cfg).ids == seq.ids

    def test_vocab_mismatch(self, tmp_path, cfg, small_cfg):
        path = str(tmp_path / "x.amtk")
        write_tokens(TokenSequence([1, 2], small_cfg), path)
        with pytest.raises(FileFormatError):
            read_tokens(path, cfg)

    def test_truncated_body(self, tmp_path, cfg):
        path = tmp_path / "x.amtk"
        path.write_bytes(b'AMTK' + struct.pack('<IIIQ', 1, 128256, 55024, 3) + b'\x00' * 4)
        with pytest.raises(FileFormatError):
            read_tokens(str(path), cfg)
