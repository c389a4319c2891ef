"""Data model for dependency-annotated sentences and relation instances.

Sentences arrive as JSONL records with tokens, per-token NE labels and a
list of labeled dependency edges.  A relation instance points at a sentence
and names two entity spans (subject and object).  Instances can be rendered
into entity-marker text, the flat form consumed by the semantic matcher.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

OUTSIDE = "O"


class CorpusError(ValueError):
    """Raised when a sentence or instance fails validation."""


class MarkedTextError(ValueError):
    """Raised when entity-marker text cannot be built or parsed."""


@dataclass(frozen=True)
class Token:
    text: str
    ner: str = OUTSIDE


@dataclass(frozen=True)
class DepEdge:
    head: int
    dependent: int
    label: str


@dataclass(frozen=True)
class AnnotatedSentence:
    id: str
    tokens: tuple[Token, ...]
    edges: tuple[DepEdge, ...] = ()

    def words(self) -> list[str]:
        return [t.text for t in self.tokens]

    def text(self) -> str:
        return " ".join(t.text for t in self.tokens)


@dataclass(frozen=True)
class EntitySpan:
    """Half-open token interval [start, end) with an entity type."""

    start: int
    end: int
    etype: str

    def indices(self) -> range:
        return range(self.start, self.end)

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start < other.end and other.start < self.end

    def text(self, sentence: AnnotatedSentence) -> str:
        return " ".join(t.text for t in sentence.tokens[self.start : self.end])


@dataclass(frozen=True)
class RelationInstance:
    sentence: AnnotatedSentence
    subj: EntitySpan
    obj: EntitySpan
    relation: str | None = None
    id: str | None = None

    def key(self) -> str:
        """Stable identifier; synthesized from coordinates when unnamed."""
        if self.id is not None:
            return self.id
        return "{}:{}-{}:{}-{}".format(
            self.sentence.id, self.subj.start, self.subj.end, self.obj.start, self.obj.end
        )


def validate_sentence(sent: AnnotatedSentence) -> None:
    """Check index bounds, label presence and edge uniqueness."""
    n = len(sent.tokens)
    if not sent.id:
        raise CorpusError("sentence id must be non-empty")
    if n == 0:
        raise CorpusError(f"{sent.id}: sentence has no tokens")
    for tok in sent.tokens:
        if tok.text == "":
            raise CorpusError(f"{sent.id}: empty token text")
        if tok.ner == "":
            raise CorpusError(f"{sent.id}: empty NE label (use {OUTSIDE!r})")
    seen: set[tuple[int, int, str]] = set()
    for e in sent.edges:
        if not (0 <= e.head < n) or not (0 <= e.dependent < n):
            raise CorpusError(f"{sent.id}: edge ({e.head},{e.dependent}) out of range")
        if e.head == e.dependent:
            raise CorpusError(f"{sent.id}: self-loop on token {e.head}")
        if not e.label:
            raise CorpusError(f"{sent.id}: empty dependency label")
        trip = (e.head, e.dependent, e.label)
        if trip in seen:
            raise CorpusError(f"{sent.id}: duplicate edge {trip}")
        seen.add(trip)


def validate_span(sent: AnnotatedSentence, span: EntitySpan, what: str = "span") -> None:
    if not (0 <= span.start < span.end <= len(sent.tokens)):
        raise CorpusError(f"{sent.id}: {what} [{span.start},{span.end}) out of range")
    if not span.etype or span.etype == OUTSIDE:
        raise CorpusError(f"{sent.id}: {what} has no entity type")


def validate_instance(inst: RelationInstance) -> None:
    validate_sentence(inst.sentence)
    validate_span(inst.sentence, inst.subj, "subject")
    validate_span(inst.sentence, inst.obj, "object")
    if inst.subj.overlaps(inst.obj):
        raise CorpusError(f"{inst.sentence.id}: subject and object spans overlap")


def entity_type_pair(inst: RelationInstance) -> tuple[str, str]:
    """(subject type, object type), case-normalized."""
    return inst.subj.etype.lower(), inst.obj.etype.lower()


# ---------------------------------------------------------------------------
# entity-marker text
#
# An instance is flattened to a single token stream in which each of the two
# argument spans is wrapped as  `# * <type> * <span tokens> #`.  Example:
#
#   # * per * Bill Gates # founded # * org * Microsoft #
# ---------------------------------------------------------------------------

MARK = "#"
TYPE_MARK = "*"
_RESERVED = {MARK, TYPE_MARK}


@dataclass(frozen=True)
class MarkerSegment:
    """One wrapped entity inside marked text."""

    etype: str
    tokens: tuple[str, ...]


def mark_entities(inst: RelationInstance) -> str:
    """Render an instance as entity-marker text.

    The two spans are wrapped in sentence order; everything else is carried
    through verbatim, so stripping the markers recovers the original tokens.
    Tokens that collide with the marker characters would make the result
    ambiguous and are rejected.
    """
    validate_instance(inst)
    first, second = sorted((inst.subj, inst.obj), key=lambda s: s.start)
    words = inst.sentence.words()
    for w in words:
        if w in _RESERVED:
            raise MarkedTextError(f"{inst.sentence.id}: token {w!r} collides with entity markers")
    for span in (first, second):
        if any(ch in span.etype for ch in _RESERVED):
            raise MarkedTextError(f"{inst.sentence.id}: entity type {span.etype!r} contains a marker character")

    def wrap(span: EntitySpan) -> list[str]:
        return [MARK, TYPE_MARK, span.etype, TYPE_MARK, *words[span.start : span.end], MARK]

    out = (
        words[: first.start]
        + wrap(first)
        + words[first.end : second.start]
        + wrap(second)
        + words[second.end :]
    )
    return " ".join(out)


def split_marked(text: str) -> list[MarkerSegment | str]:
    """Split marked text into plain tokens and MarkerSegments, in order."""
    toks = text.split()
    out: list[MarkerSegment | str] = []
    i = 0
    while i < len(toks):
        if toks[i] != MARK:
            out.append(toks[i])
            i += 1
            continue
        if i + 1 >= len(toks) or toks[i + 1] != TYPE_MARK:
            raise MarkedTextError(f"bad marker opening at token {i}")
        try:
            close_type = toks.index(TYPE_MARK, i + 2)
            close = toks.index(MARK, close_type + 1)
        except ValueError:
            raise MarkedTextError(f"unterminated marker at token {i}") from None
        etype = " ".join(toks[i + 2 : close_type])
        inner = tuple(toks[close_type + 1 : close])
        if not etype or not inner:
            raise MarkedTextError(f"empty marker at token {i}")
        out.append(MarkerSegment(etype=etype, tokens=inner))
        i = close + 1
    return out


def marker_segments(text: str) -> list[MarkerSegment]:
    return [s for s in split_marked(text) if isinstance(s, MarkerSegment)]


def unmark(text: str) -> list[str]:
    """Recover the underlying token sequence from marked text."""
    toks: list[str] = []
    for seg in split_marked(text):
        if isinstance(seg, MarkerSegment):
            toks.extend(seg.tokens)
        else:
            toks.append(seg)
    return toks


# ---------------------------------------------------------------------------
# JSON (de)serialization
# ---------------------------------------------------------------------------


def sentence_to_json(sent: AnnotatedSentence) -> dict:
    return {
        "id": sent.id,
        "tokens": [t.text for t in sent.tokens],
        "ner": [t.ner for t in sent.tokens],
        "edges": [[e.head, e.dependent, e.label] for e in sent.edges],
    }


def sentence_from_json(obj: dict) -> AnnotatedSentence:
    try:
        tokens = obj["tokens"]
        ner = obj.get("ner") or [OUTSIDE] * len(tokens)
        if len(ner) != len(tokens):
            raise CorpusError(f"{obj.get('id')}: ner length {len(ner)} != token length {len(tokens)}")
        sent = AnnotatedSentence(
            id=str(obj["id"]),
            tokens=tuple(Token(text=t, ner=l) for t, l in zip(tokens, ner)),
            edges=tuple(DepEdge(int(h), int(d), str(l)) for h, d, l in obj.get("edges", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CorpusError):
            raise
        raise CorpusError(f"malformed sentence record: {exc}") from exc
    validate_sentence(sent)
    return sent


def _span_from_json(raw, what: str) -> EntitySpan:
    try:
        start, end, etype = raw
        return EntitySpan(int(start), int(end), str(etype))
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"malformed {what} span: {raw!r}") from exc


def instance_to_json(inst: RelationInstance, inline_sentence: bool = True) -> dict:
    obj: dict = {"id": inst.key()}
    if inline_sentence:
        obj["sentence"] = sentence_to_json(inst.sentence)
    else:
        obj["sentence_id"] = inst.sentence.id
    obj["subj"] = [inst.subj.start, inst.subj.end, inst.subj.etype]
    obj["obj"] = [inst.obj.start, inst.obj.end, inst.obj.etype]
    obj["relation"] = inst.relation
    return obj


def instance_from_json(obj: dict, sentences: dict[str, AnnotatedSentence] | None = None) -> RelationInstance:
    """Decode an instance with either an inline sentence or a sentence_id ref."""
    if "sentence" in obj:
        sent = sentence_from_json(obj["sentence"])
    else:
        sid = obj.get("sentence_id")
        if sentences is None or sid not in sentences:
            raise CorpusError(f"instance references unknown sentence {sid!r}")
        sent = sentences[sid]
    inst = RelationInstance(
        sentence=sent,
        subj=_span_from_json(obj.get("subj"), "subject"),
        obj=_span_from_json(obj.get("obj"), "object"),
        relation=obj.get("relation"),
        id=str(obj["id"]) if obj.get("id") is not None else None,
    )
    validate_instance(inst)
    return inst


def _iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc})") from exc


def load_corpus(path) -> list[AnnotatedSentence]:
    """Read a sentence JSONL file, validating every record."""
    out = []
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(path):
        try:
            sent = sentence_from_json(obj)
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
        if sent.id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate sentence id {sent.id!r}")
        seen.add(sent.id)
        out.append(sent)
    return out


def save_corpus(sentences: Iterable[AnnotatedSentence], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(json.dumps(sentence_to_json(s)) + "\n")


def load_instances(path, sentences: dict[str, AnnotatedSentence] | None = None) -> list[RelationInstance]:
    out = []
    for lineno, obj in _iter_jsonl(path):
        try:
            out.append(instance_from_json(obj, sentences))
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    return out


def save_instances(instances: Iterable[RelationInstance], path, inline_sentence: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(instance_to_json(inst, inline_sentence)) + "\n")
