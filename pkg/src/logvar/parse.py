"""Templates from tagged logs, with selected variable categories preserved.

Contiguous B-X(+I-X) runs form one variable occurrence each. Occurrences
whose category is in the preserve set keep their concrete (space-joined)
value in the rendered template; all others become the wildcard token. The
canonical template, which defines template identity, always abstracts every
variable, so preservation never fragments template ids.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import AnnotatedLog
from .errors import EmptyLog
from .evaluate import spans
from .tagger import TaggerModel, tag_log
from .taxonomy import VariableCategory

DEFAULT_WILDCARD = "<*>"


@dataclass(frozen=True)
class Extraction:
    category: str
    value: str
    start: int
    end: int  # exclusive token index

    def to_dict(self) -> dict:
        return {"category": self.category, "value": self.value,
                "start": self.start, "end": self.end}


@dataclass(frozen=True)
class ParseResult:
    template: str
    canonical_template: str
    template_id: str
    extractions: tuple[Extraction, ...]


@dataclass
class TemplateStore:
    """Canonical template -> (id, first-seen ordinal, occurrence count)."""

    entries: dict[str, dict] = field(default_factory=dict)

    def intern(self, canonical: str) -> str:
        entry = self.entries.get(canonical)
        if entry is None:
            entry = {
                "template_id": template_hash(canonical),
                "ordinal": len(self.entries),
                "count": 0,
            }
            self.entries[canonical] = entry
        entry["count"] += 1
        return entry["template_id"]

    def summary(self) -> list[dict]:
        return [
            {"template_id": e["template_id"], "ordinal": e["ordinal"],
             "canonical_template": tpl, "count": e["count"]}
            for tpl, e in sorted(self.entries.items(), key=lambda kv: kv[1]["ordinal"])
        ]


def template_hash(canonical: str) -> str:
    """Stable 64-bit identifier of a canonical template string."""
    return hashlib.blake2b(canonical.encode("utf-8"), digest_size=8).hexdigest()


def extract_template(
    log: AnnotatedLog,
    preserve: set[VariableCategory] | frozenset[VariableCategory] = frozenset(),
    wildcard: str = DEFAULT_WILDCARD,
) -> ParseResult:
    preserve_abbrevs = {c.abbrev for c in preserve}
    runs = spans(log.tags)
    out_tokens: list[str] = []
    canon_tokens: list[str] = []
    extractions: list[Extraction] = []
    pos = 0
    for cat, start, end in runs:
        out_tokens.extend(log.tokens[pos:start])
        canon_tokens.extend(log.tokens[pos:start])
        value = " ".join(log.tokens[start:end])
        out_tokens.append(value if cat in preserve_abbrevs else wildcard)
        canon_tokens.append(wildcard)
        extractions.append(Extraction(cat, value, start, end))
        pos = end
    out_tokens.extend(log.tokens[pos:])
    canon_tokens.extend(log.tokens[pos:])
    canonical = " ".join(canon_tokens)
    return ParseResult(
        template=" ".join(out_tokens),
        canonical_template=canonical,
        template_id=template_hash(canonical),
        extractions=tuple(extractions),
    )


def reconstruct(result: ParseResult, canonical: bool = True) -> str:
    """Rebuild the original message from a canonical template + extractions."""
    parts = (result.canonical_template if canonical else result.template).split(" ")
    values = iter(result.extractions)
    rebuilt: list[str] = []
    for tok in parts:
        if tok == DEFAULT_WILDCARD:
            rebuilt.append(next(values).value)
        else:
            rebuilt.append(tok)
    return " ".join(rebuilt)


def _worker_count() -> int:
    env = os.environ.get("VALB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def parse_corpus(
    model: TaggerModel,
    raw_logs: list[str],
    preserve: set[VariableCategory] | frozenset[VariableCategory] = frozenset(),
    wildcard: str = DEFAULT_WILDCARD,
) -> tuple[list[ParseResult | None], TemplateStore]:
    """Tag and template every raw log; empty lines yield None entries.

    Output order matches input order. Tagging may run on several threads
    (VALB_THREADS); template ids and ordinals are assigned in a single
    ordered pass afterwards, so results are deterministic either way.
    """
    if model.mode != "multiclass":
        raise ValueError("parse_corpus requires a multiclass model")

    def tag_one(raw: str) -> AnnotatedLog | None:
        try:
            return tag_log(model, raw)
        except EmptyLog:
            return None

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tagged = list(pool.map(tag_one, raw_logs))
    else:
        tagged = [tag_one(raw) for raw in raw_logs]

    store = TemplateStore()
    results: list[ParseResult | None] = []
    for annotated in tagged:
        if annotated is None:
            results.append(None)
            continue
        result = extract_template(annotated, preserve, wildcard)
        store.intern(result.canonical_template)
        results.append(result)
    return results, store


def result_record(line_no: int, result: ParseResult) -> str:
    """One line-delimited JSON record for parsed output files."""
    return json.dumps(
        {
            "line_no": line_no,
            "template_id": result.template_id,
            "template": result.template,
            "extractions": [e.to_dict() for e in result.extractions],
        },
        ensure_ascii=False,
    )
