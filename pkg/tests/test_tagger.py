import numpy as np
import pytest

from logvar.corpus import AnnotatedLog
from logvar.embed import PAD, build_vocabs, encode_log
from logvar.synth import generate_synthetic
from logvar.tagger import (
    FROZEN_SCORE,
    Hyperparams,
    char_representation,
    decode,
    forward_emissions,
    init_model,
    loss_and_gradients,
    tag_log,
)
from logvar.taxonomy import BINARY, Tag, is_valid_transition

TINY_HP = Hyperparams(
    word_dim=7, char_emb_dim=5, char_filters=4, char_kernel=3,
    lstm_hidden=3, dropout=0.2, max_word_len=8,
)


@pytest.fixture(scope="module")
def corpus():
    logs, _ = generate_synthetic(seed=5, n_templates=5, n_logs=60)
    return logs


@pytest.fixture(scope="module")
def vocabs(corpus):
    return build_vocabs(corpus[:30])


@pytest.fixture(scope="module")
def tiny_model(vocabs):
    wv, cv = vocabs
    return init_model(TINY_HP, wv, cv, seed=3)


class TestInit:
    def test_deterministic(self, vocabs):
        wv, cv = vocabs
        a = init_model(TINY_HP, wv, cv, seed=11)
        b = init_model(TINY_HP, wv, cv, seed=11)
        for name in a.params:
            assert (a.params[name] == b.params[name]).all()

    def test_iob_violations_frozen(self, tiny_model):
        m = tiny_model
        o = m.tag_index(Tag.parse("O"))
        i_oid = m.tag_index(Tag.parse("I-OID"))
        b_oid = m.tag_index(Tag.parse("B-OID"))
        assert m.params["trans"][o, i_oid] == FROZEN_SCORE
        assert m.params["trans"][b_oid, i_oid] == 0.0
        assert m.params["start"][i_oid] == FROZEN_SCORE

    def test_shapes(self, tiny_model):
        m, hp = tiny_model, TINY_HP
        assert m.params["word_emb"].shape == (len(m.word_vocab), hp.word_dim)
        assert m.params["char_W"].shape == (hp.char_kernel, hp.char_emb_dim, hp.char_filters)
        assert m.params["lstm_f_Wx"].shape == (hp.input_dim, 4 * hp.lstm_hidden)
        assert m.params["proj_W"].shape == (2 * hp.lstm_hidden, 21)
        assert m.params["trans"].shape == (21, 21)

    def test_binary_mode_three_tags(self, vocabs):
        wv, cv = vocabs
        m = init_model(TINY_HP, wv, cv, seed=0, mode=BINARY)
        assert m.n_tags == 3
        assert m.params["trans"].shape == (3, 3)


class TestCharRepresentation:
    def test_output_length(self, tiny_model):
        row = np.array([2, 3, 2, PAD, PAD, PAD, PAD, PAD])
        rep = char_representation(row, tiny_model)
        assert rep.shape == (TINY_HP.char_filters,)

    def test_repeated_chars_interior_pooling(self, vocabs):
        # identical characters: interior conv outputs are identical, so the
        # pool equals an interior value per filter (computed directly)
        wv, cv = vocabs
        hp = Hyperparams(word_dim=4, char_emb_dim=3, char_filters=1,
                         char_kernel=3, lstm_hidden=2, max_word_len=6)
        m = init_model(hp, wv, cv, seed=1)
        cid = 2
        row = np.full(6, cid)
        emb = m.params["char_emb"][cid]
        w, b = m.params["char_W"], m.params["char_b"]
        interior = float(emb @ w[0,:,0] + emb @ w[1,:,0] + emb @ w[2,:,0] + b[0])
        edge_left = float(emb @ w[1,:,0] + emb @ w[2,:,0] + b[0])
        edge_right = float(emb @ w[0,:,0] + emb @ w[1,:,0] + b[0])
        rep = char_representation(row, m)
        assert rep[0] == pytest.approx(max(interior, edge_left, edge_right), rel=1e-5)

    def test_pad_only_row_gives_bias(self, tiny_model):
        row = np.full(8, PAD)
        rep = char_representation(row, tiny_model)
        np.testing.assert_array_equal(rep, tiny_model.params["char_b"])

    def test_pad_positions_inert(self, tiny_model):
        short = np.array([2, 3, PAD, PAD, PAD, PAD, PAD, PAD])
        # PAD contributes zero vectors, so extra trailing PADs change nothing
        a = char_representation(short, tiny_model)
        b = char_representation(np.array([2, 3, PAD, PAD, PAD, PAD, PAD, PAD]), tiny_model)
        np.testing.assert_array_equal(a, b)


class TestForward:
    def test_emission_shape_and_determinism(self, tiny_model, corpus):
        m = tiny_model
        enc = m.encode(corpus[0])
        e1 = forward_emissions(enc, m, train_mode=False)
        e2 = forward_emissions(enc, m, train_mode=False)
        assert e1.shape == (enc.token_count, 21)
        np.testing.assert_array_equal(e1, e2)

    def test_dropout_seed_controls_train_mode(self, tiny_model, corpus):
        m = tiny_model
        enc = m.encode(corpus[0])
        a = forward_emissions(enc, m, train_mode=True, dropout_seed=1)
        b = forward_emissions(enc, m, train_mode=True, dropout_seed=1)
        c = forward_emissions(enc, m, train_mode=True, dropout_seed=2)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_char_ablation_equals_zeroed_char_channel(self, vocabs, corpus):
        # the baseline model ("no char channel") must produce exactly the
        # emissions of the full model when the char output is forced to zero
        wv, cv = vocabs
        full = init_model(TINY_HP, wv, cv, seed=9)
        ablated = init_model(
            Hyperparams(**{**TINY_HP.to_dict(), "use_char_channel": False}),
            wv, cv, seed=9,
        )
        enc = full.encode(corpus[1])
        zeroed = init_model(TINY_HP, wv, cv, seed=9)
        zeroed.params["char_emb"][:] = 0.0
        zeroed.params["char_b"][:] = 0.0
        np.testing.assert_allclose(
            forward_emissions(enc, ablated, train_mode=False),
            forward_emissions(enc, zeroed, train_mode=False),
            rtol=1e-6,
        )


class TestGradients:
    def test_finite_differences_tiny_model(self, vocabs, corpus):
        wv, cv = vocabs
        m = init_model(TINY_HP, wv, cv, seed=4, dtype=np.float64)
        batch = [(m.encode(l), m.encode_tags(l)) for l in corpus[:3]]
        loss, grads = loss_and_gradients(m, batch, train_mode=True, dropout_seed=13)
        h = 1e-5
        rng = np.random.default_rng(0)
        for name, arr in m.params.items():
            flat = arr.ravel()
            for i in rng.choice(flat.size, size=min(5, flat.size), replace=False):
                orig = flat[i]
                flat[i] = orig + h
                up, _ = loss_and_gradients(m, batch, train_mode=True, dropout_seed=13)
                flat[i] = orig - h
                dn, _ = loss_and_gradients(m, batch, train_mode=True, dropout_seed=13)
                flat[i] = orig
                fd = (up - dn) / (2 * h)
                an = grads[name].ravel()[i]
                assert an == pytest.approx(fd, abs=1e-6), f"{name}[{i}]"

    def test_frozen_transition_gradient_zero(self, tiny_model, corpus):
        m = tiny_model
        batch = [(m.encode(l), m.encode_tags(l)) for l in corpus[:4]]
        _, grads = loss_and_gradients(m, batch)
        assert (grads["trans"][m.frozen_trans] == 0).all()
        assert (grads["start"][m.frozen_start] == 0).all()

    def test_pad_embedding_gradients_zero(self, tiny_model, corpus):
        m = tiny_model
        batch = [(m.encode(l), m.encode_tags(l)) for l in corpus[:4]]
        _, grads = loss_and_gradients(m, batch)
        assert (grads["word_emb"][PAD] == 0).all()
        assert (grads["char_emb"][PAD] == 0).all()


class TestDecode:
    def test_decoded_paths_are_iob_valid(self, vocabs, corpus):
        wv, cv = vocabs
        for seed in range(5):
            m = init_model(TINY_HP, wv, cv, seed=seed)
            for log in corpus[:10]:
                tags = decode(m, m.encode(log))
                prev = None
                for t in tags:
                    assert is_valid_transition(prev, t)
                    prev = t

    def test_tag_log_deterministic(self, tiny_model):
        raw = "Starting executor ID 5 on host meso-07"
        a = tag_log(tiny_model, raw)
        b = tag_log(tiny_model, raw)
        assert a == b
        assert a.tokens == tuple(raw.split())
