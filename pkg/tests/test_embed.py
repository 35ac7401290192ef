import numpy as np
import pytest

from logvar.corpus import AnnotatedLog
from logvar.embed import PAD, UNK, build_vocabs, encode_log, load_word_vectors
from logvar.errors import DimensionMismatch, FormatError
from logvar.taxonomy import OUTSIDE


def log_of(text):
    toks = tuple(text.split())
    return AnnotatedLog(toks, tuple(OUTSIDE for _ in toks))


TRAIN = [log_of("ID id Id foo"), log_of("bar ID ab5"), log_of("foo baz")]


class TestBuildVocabs:
    def test_lowercased_threshold(self):
        wv, _ = build_vocabs(TRAIN, min_freq=2)
        assert wv.lookup("ID") != UNK  # "id" appears 4x after lowercasing
        assert wv.lookup("foo") != UNK
        assert wv.lookup("baz") == UNK  # seen once

    def test_char_vocab_contents(self):
        _, cv = build_vocabs([log_of("ab5")])
        assert len(cv) == 5  # PAD, UNK, a, b, 5
        assert cv.lookup("a") != UNK
        assert cv.lookup("z") == UNK

    def test_chars_preserve_case(self):
        _, cv = build_vocabs([log_of("Ab")])
        assert cv.lookup("A") != cv.lookup("a")

    def test_empty_train_rejected(self):
        with pytest.raises(ValueError):
            build_vocabs([])


class TestEncode:
    def setup_method(self):
        self.wv, self.cv = build_vocabs(TRAIN)

    def test_char_row_padding(self):
        enc = encode_log(log_of("a5"), self.wv, self.cv, max_word_len=6)
        row = enc.char_ids[0]
        assert row[0] == self.cv.lookup("a")
        assert row[1] == self.cv.lookup("5")
        assert all(row[2:] == PAD)

    def test_unseen_word_maps_to_unk_chars_still_meaningful(self):
        enc = encode_log(log_of("idfoo"), self.wv, self.cv, max_word_len=8)
        assert enc.word_ids[0] == UNK
        assert enc.char_ids[0][0] == self.cv.lookup("i")

    def test_truncation(self):
        enc = encode_log(log_of("abcdefgh"), self.wv, self.cv, max_word_len=3)
        assert enc.char_ids.shape == (1, 3)
        assert (enc.char_ids[0] != PAD).all()

    def test_encoding_total_and_deterministic(self):
        log = log_of("completely unseen Zz9")
        a = encode_log(log, self.wv, self.cv)
        b = encode_log(log, self.wv, self.cv)
        assert (a.word_ids == b.word_ids).all()
        assert (a.char_ids == b.char_ids).all()


class TestLoadWordVectors:
    def write_vectors(self, tmp_path, lines):
        path = tmp_path / "vecs.txt"
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_copy_and_coverage(self, tmp_path):
        wv, _ = build_vocabs(TRAIN)
        n_words = len(wv) - 2
        path = self.write_vectors(
            tmp_path, ["id 1.0 2.0 3.0", "foo 0.5 0.5 0.5", "zzz 9 9 9"]
        )
        matrix, coverage = load_word_vectors(path, wv, dim=3)
        assert matrix.shape == (len(wv), 3)
        np.testing.assert_allclose(matrix[wv.lookup("ID")], [1.0, 2.0, 3.0])
        assert coverage == pytest.approx(2 / n_words)

    def test_pad_row_zero_unk_random(self, tmp_path):
        wv, _ = build_vocabs(TRAIN)
        path = self.write_vectors(tmp_path, ["id 1 1 1"])
        matrix, _ = load_word_vectors(path, wv, dim=3)
        assert (matrix[PAD] == 0).all()
        assert (np.abs(matrix[UNK]) <= 0.25).all()

    def test_dimension_mismatch(self, tmp_path):
        wv, _ = build_vocabs(TRAIN)
        path = self.write_vectors(tmp_path, ["id 1 2"])
        with pytest.raises(DimensionMismatch):
            load_word_vectors(path, wv, dim=3)

    def test_malformed_line(self, tmp_path):
        wv, _ = build_vocabs(TRAIN)
        path = self.write_vectors(tmp_path, ["id 1 2 notafloat"])
        with pytest.raises(FormatError):
            load_word_vectors(path, wv, dim=3)
