"""End-to-end walkthrough: synthesize a corpus, train a tagger, parse logs.

Run from the repository root after `pip install -e .`:

    python3 demos/train_and_parse.py

Uses a reduced model so the whole script finishes in a few minutes.
"""

from logvar import (
    Hyperparams,
    SplitSpec,
    TrainConfig,
    VariableCategory,
    build_vocabs,
    extract_template,
    generate_synthetic,
    init_model,
    parse_corpus,
    split_dataset,
    tag_log,
    train,
)

# 1. A synthetic annotated corpus: 10 templates, 600 log lines.
logs, gen_spec = generate_synthetic(seed=7, n_templates=10, n_logs=600)
print(f"corpus: {len(logs)} logs from {len(gen_spec.templates)} templates")
print("sample:", " ".join(logs[0].tokens))
print("tags:  ", " ".join(str(t) for t in logs[0].tags))

# 2. Split 80/10/10 and build vocabularies from the training portion.
train_set, val_set, test_set = split_dataset(
    logs, SplitSpec(0.8, 0.1, 0.1, seed=42))
word_vocab, char_vocab = build_vocabs(train_set)
print(f"vocab: {len(word_vocab)} words, {len(char_vocab)} chars")

# 3. Train a small multiclass model.
hp = Hyperparams(word_dim=50, char_emb_dim=60, char_filters=30, lstm_hidden=64)
model0 = init_model(hp, word_vocab, char_vocab, mode="multiclass", seed=1)
model, history = train(model0, train_set, val_set, TrainConfig(epochs=12, seed=1))
best = max(history, key=lambda s: s.val_metric)
print(f"best epoch {best.epoch}: val variable-aware accuracy {best.val_metric:.4f}")

# 4. Tag a raw line and extract its template, keeping object ids verbatim.
raw = " ".join(test_set[0].tokens)
tagged = tag_log(model, raw)
extraction = extract_template(tagged, preserve={VariableCategory.OBJECT_ID})
print("raw:     ", raw)
print("template:", extraction.template)
print("values:  ", [(e.category, e.value) for e in extraction.extractions])

# 5. Parse the whole test split into a template store.
results, store = parse_corpus(model, [" ".join(l.tokens) for l in test_set])
print(f"parsed {len(results)} lines into {len(store.entries)} templates")
for summary in store.summary()[:5]:
    print(f"  [{summary['count']:3d}] {summary['canonical_template']}")
