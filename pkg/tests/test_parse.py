import pytest

from logvar.corpus import AnnotatedLog
from logvar.embed import build_vocabs
from logvar.parse import (
    TemplateStore,
    extract_template,
    parse_corpus,
    reconstruct,
    template_hash,
)
from logvar.synth import generate_synthetic
from logvar.tagger import Hyperparams, init_model
from logvar.taxonomy import BINARY, Tag, VariableCategory


def mklog(text, tags):
    return AnnotatedLog(tuple(text.split()), tuple(Tag.parse(t) for t in tags.split()))


SPARK = mklog("Starting executor ID 5 on host meso-07", "O O O B-OID O O B-OBN")


class TestExtractTemplate:
    def test_abstract_everything(self):
        result = extract_template(SPARK)
        assert result.template == "Starting executor ID <*> on host <*>"
        assert result.canonical_template == result.template

    def test_preserve_oid(self):
        result = extract_template(SPARK, {VariableCategory.OBJECT_ID})
        assert result.template == "Starting executor ID 5 on host <*>"
        by_cat = {e.category: e for e in result.extractions}
        assert by_cat["OID"].value == "5"
        assert by_cat["OBN"].value == "meso-07"

    def test_canonical_invariant_under_preserve(self):
        base = extract_template(SPARK)
        for preserve in ({VariableCategory.OBJECT_ID}, set(VariableCategory)):
            other = extract_template(SPARK, preserve)
            assert other.canonical_template == base.canonical_template
            assert other.template_id == base.template_id

    def test_all_static_log(self):
        log = mklog("nothing dynamic here", "O O O")
        result = extract_template(log)
        assert result.template == log.text
        assert result.extractions == ()

    def test_multi_token_run_merges(self):
        log = mklog("used 126 MB total", "O B-CRS I-CRS O")
        result = extract_template(log)
        assert result.canonical_template == "used <*> total"
        assert result.extractions[0].value == "126 MB"
        assert (result.extractions[0].start, result.extractions[0].end) == (1, 2 + 1)

    def test_wildcard_override(self):
        result = extract_template(SPARK, wildcard="*")
        assert result.template == "Starting executor ID * on host *"

    def test_wildcard_count_equals_runs(self):
        log = mklog("a 1 2 b 3", "O B-OID I-OID O B-STC")
        result = extract_template(log)
        assert result.canonical_template.count("<*>") == 2

    def test_reconstruction(self):
        for log in (SPARK, mklog("used 126 MB total", "O B-CRS I-CRS O")):
            assert reconstruct(extract_template(log)) == log.text


class TestTemplateStore:
    def test_interning_counts(self):
        store = TemplateStore()
        id1 = store.intern("a <*> b")
        id2 = store.intern("a <*> b")
        id3 = store.intern("c <*>")
        assert id1 == id2 != id3
        summary = store.summary()
        assert summary[0]["count"] == 2
        assert summary[0]["ordinal"] == 0
        assert summary[1]["ordinal"] == 1

    def test_hash_stable(self):
        assert template_hash("a <*> b") == template_hash("a <*> b")
        assert len(template_hash("x")) == 16  # 64-bit hex


@pytest.fixture(scope="module")
def model():
    logs, _ = generate_synthetic(seed=4, n_templates=5, n_logs=60)
    wv, cv = build_vocabs(logs)
    hp = Hyperparams(word_dim=8, char_emb_dim=6, char_filters=4,
                     char_kernel=3, lstm_hidden=4, max_word_len=12)
    return init_model(hp, wv, cv, seed=0)


class TestParseCorpus:
    def test_order_and_none_for_empty(self, model):
        results, store = parse_corpus(model, ["alpha beta", "", "gamma 7"])
        assert len(results) == 3
        assert results[1] is None
        assert results[0] is not None and results[2] is not None

    def test_same_value_shape_same_template(self, model):
        # untrained models still tag deterministically, so two identical
        # messages must intern to one template id
        results, store = parse_corpus(model, ["alpha beta 1", "alpha beta 1"])
        assert results[0].template_id == results[1].template_id
        entry = store.entries[results[0].canonical_template]
        assert entry["count"] == 2

    def test_binary_model_rejected(self):
        logs, _ = generate_synthetic(seed=4, n_templates=5, n_logs=60)
        wv, cv = build_vocabs(logs)
        hp = Hyperparams(word_dim=8, char_emb_dim=6, char_filters=4,
                         char_kernel=3, lstm_hidden=4, max_word_len=12)
        binary = init_model(hp, wv, cv, seed=0, mode=BINARY)
        with pytest.raises(ValueError):
            parse_corpus(binary, ["a b"])

    def test_thread_count_does_not_change_output(self, model, monkeypatch):
        raws = [f"alpha beta {i}" for i in range(20)]
        base, base_store = parse_corpus(model, raws)
        monkeypatch.setenv("VALB_THREADS", "4")
        threaded, threaded_store = parse_corpus(model, raws)
        assert base == threaded
        assert base_store.summary() == threaded_store.summary()
