import numpy as np
import pytest

from logvar.corpus import AnnotatedLog
from logvar.embed import build_vocabs
from logvar.errors import ChecksumError, FormatError, VersionError
from logvar.synth import generate_synthetic
from logvar.tagger import Hyperparams, decode, init_model, tag_log
from logvar.taxonomy import BINARY, BINARY_CATEGORY, Tag
from logvar.train import (
    Adam,
    TrainConfig,
    clip_global_norm,
    finetune,
    load_model,
    save_model,
    train,
)

SMALL_HP = Hyperparams(
    word_dim=16, char_emb_dim=12, char_filters=8, char_kernel=3,
    lstm_hidden=12, dropout=0.1, max_word_len=16,
)


@pytest.fixture(scope="module")
def memorization_run():
    logs, _ = generate_synthetic(seed=8, n_templates=5, n_logs=60)
    train_set, val_set = logs[:20], logs[20:30]
    wv, cv = build_vocabs(train_set)
    model = init_model(SMALL_HP, wv, cv, seed=1)
    cfg = TrainConfig(epochs=30, batch_size=4, learning_rate=0.02, seed=7)
    best, history = train(model, train_set, val_set, cfg)
    return train_set, val_set, best, history, cfg, model


class TestTrain:
    def test_memorization_loss_below_threshold(self, memorization_run):
        _, _, _, history, _, _ = memorization_run
        assert min(h.train_loss for h in history) < 0.05

    def test_history_length(self, memorization_run):
        _, _, _, history, cfg, _ = memorization_run
        assert len(history) == cfg.epochs
        assert [h.epoch for h in history] == list(range(cfg.epochs))

    def test_best_at_least_first_epoch(self, memorization_run):
        _, val_set, best, history, cfg, _ = memorization_run
        best_metric = max(h.val_metric for h in history)
        assert best_metric >= history[0].val_metric

    def test_deterministic_same_seed(self, memorization_run):
        train_set, val_set, best, history, cfg, model = memorization_run
        best2, history2 = train(model, train_set, val_set, cfg)
        assert [h.val_metric for h in history] == [h.val_metric for h in history2]
        assert [h.train_loss for h in history] == [h.train_loss for h in history2]
        for name in best.params:
            assert (best.params[name] == best2.params[name]).all()

    def test_loss_trend_late_window(self, memorization_run):
        _, _, _, history, _, _ = memorization_run
        losses = [h.train_loss for h in history]
        # mean over any late 5-epoch window never rises above the window before it
        for i in range(5, len(losses) - 5, 5):
            assert np.mean(losses[i + 5 : i + 10]) <= np.mean(losses[i : i + 5]) + 0.05

    def test_empty_sets_rejected(self, memorization_run):
        train_set, val_set, _, _, cfg, model = memorization_run
        with pytest.raises(ValueError):
            train(model, [], val_set, cfg)

    def test_mode_mismatch_rejected(self, memorization_run):
        train_set, val_set, _, _, _, model = memorization_run
        with pytest.raises(ValueError):
            train(model, train_set, val_set, TrainConfig(epochs=1, mode=BINARY))


class TestFinetune:
    def test_empty_target_rejected(self, memorization_run):
        _, val_set, best, _, cfg, _ = memorization_run
        with pytest.raises(ValueError):
            finetune(best, [], val_set, cfg)

    def test_runs_on_five_logs(self, memorization_run):
        _, val_set, best, _, _, _ = memorization_run
        logs, _ = generate_synthetic(seed=21, n_templates=5, n_logs=50)
        cfg = TrainConfig(epochs=2, seed=3)
        tuned, history = finetune(best, logs[:5], logs[5:10], cfg)
        assert len(history) == 2
        assert tuned.word_vocab.index == best.word_vocab.index  # vocab reused


class TestOptimizer:
    def test_adam_converges_on_quadratic(self):
        params = {"x": np.array([5.0, -3.0])}
        opt = Adam(params, lr=0.1)
        for _ in range(500):
            opt.step(params, {"x": 2 * params["x"]})
        assert np.abs(params["x"]).max() < 1e-3

    def test_clip_global_norm(self):
        grads = {"a": np.array([3.0]), "b": np.array([4.0])}
        total = clip_global_norm(grads, 1.0)
        assert total == pytest.approx(5.0)
        clipped = np.sqrt(grads["a"][0] ** 2 + grads["b"][0] ** 2)
        assert clipped == pytest.approx(1.0)


class TestSerialization:
    def test_round_trip_bit_exact(self, memorization_run, tmp_path):
        _, _, best, _, _, _ = memorization_run
        path = tmp_path / "model.valb"
        save_model(best, path)
        loaded = load_model(path)
        assert set(loaded.params) == set(best.params)
        for name in best.params:
            assert loaded.params[name].dtype == np.float32
            assert (loaded.params[name] == best.params[name]).all()
        assert loaded.hp == best.hp
        assert loaded.mode == best.mode
        assert loaded.tags == best.tags
        assert loaded.word_vocab == best.word_vocab
        assert loaded.char_vocab == best.char_vocab

    def test_round_trip_same_tags(self, memorization_run, tmp_path):
        train_set, _, best, _, _, _ = memorization_run
        path = tmp_path / "model.valb"
        save_model(best, path)
        loaded = load_model(path)
        for log in train_set[:5]:
            assert tag_log(loaded, log.text) == tag_log(best, log.text)

    def test_truncated_file_checksum_error(self, memorization_run, tmp_path):
        _, _, best, _, _, _ = memorization_run
        path = tmp_path / "model.valb"
        save_model(best, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ChecksumError):
            load_model(path)

    def test_corrupted_byte_checksum_error(self, memorization_run, tmp_path):
        _, _, best, _, _, _ = memorization_run
        path = tmp_path / "model.valb"
        save_model(best, path)
        blob = bytearray(path.read_bytes())
        blob[100] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(ChecksumError):
            load_model(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.valb"
        path.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(FormatError):
            load_model(path)

    def test_unknown_version(self, memorization_run, tmp_path):
        import hashlib
        import struct

        _, _, best, _, _, _ = memorization_run
        path = tmp_path / "model.valb"
        save_model(best, path)
        blob = bytearray(path.read_bytes())[:-8]
        blob[4:8] = struct.pack("<I", 99)
        blob += hashlib.blake2b(bytes(blob), digest_size=8).digest()
        path.write_bytes(bytes(blob))
        with pytest.raises(VersionError):
            load_model(path)

    def test_binary_mode_metadata(self, tmp_path):
        logs, _ = generate_synthetic(seed=13, n_templates=5, n_logs=50)
        binary = [
            AnnotatedLog(
                l.tokens,
                tuple(t if t.is_outside else Tag(t.prefix, BINARY_CATEGORY) for t in l.tags),
            )
            for l in logs
        ]
        wv, cv = build_vocabs(binary[:20])
        model = init_model(SMALL_HP, wv, cv, seed=2, mode=BINARY)
        path = tmp_path / "binary.valb"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.mode == BINARY
        assert loaded.n_tags == 3
