"""Synthetic contrastive training data: (rule, marked sentence) pairs.

The pipeline runs in five seeded stages over an annotated corpus:

1. sample  — pick one entity pair per sentence from the allowed type pairs;
2. build   — read a rule off each instance's dependency path and render the
             sentence with entity markers;
3. preprocess — drop exact duplicates, then cap each type pair's count so no
             pair combination dominates the data;
4. augment — swap entity types for synonyms, consistently in the rule and
             in the matching sentence marker;
5. paraphrase — ask a paraphraser for rewrites of the plain sentence, keep
             the ones where both entities survive exactly once, and pair
             them with the original rule.

Stage 5 is where the strict link between rule and sentence is deliberately
broken: a paraphrase usually no longer matches the rule, which is exactly
the supervision a semantic matcher needs.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping

from .corpus import (
    AnnotatedSentence,
    EntitySpan,
    MarkedTextError,
    MarkerSegment,
    RelationInstance,
    mark_entities,
    marker_segments,
    split_marked,
    unmark,
)
from .paraphrase import Paraphraser
from .rulegen import NoPathError, generate_syntactic_rule
from .rules import Rule, RuleKind, parse_rule, rule_signature, serialize_rule
from .synonyms import ALLOWED_TYPE_PAIRS, TYPE_SYNONYMS, canonical_pair, synonyms_for

log = logging.getLogger(__name__)

SAMPLED = "sampled"
PARAPHRASE = "paraphrase"


@dataclass(frozen=True)
class TrainingPair:
    rule_text: str
    sentence_text: str
    origin: str = SAMPLED
    # the sampled (subject, object) types, canonical — kept stable through
    # augmentation so capping and stats always group by the original pair
    type_pair: tuple[str, str] = ("", "")
    # in-memory only: the instance the pair was built from (None once loaded
    # back from disk, and always None for paraphrased pairs)
    source: RelationInstance | None = None


@dataclass
class PipelineConfig:
    allowed_type_pairs: frozenset[tuple[str, str]] = ALLOWED_TYPE_PAIRS
    per_pair_cap: int = 500
    synonym_table: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: dict(TYPE_SYNONYMS))
    augment_prob: float = 0.3
    paraphrase: bool = True
    seed: int = 0
    no_paraphrase: bool = False
    no_preprocess: bool = False
    no_augment: bool = False

    def __post_init__(self):
        if not 0.0 <= self.augment_prob <= 1.0:
            raise ValueError(f"augment_prob must be in [0,1], got {self.augment_prob}")
        if self.per_pair_cap < 1:
            raise ValueError(f"per_pair_cap must be >= 1, got {self.per_pair_cap}")

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        kwargs = dict(obj)
        if "allowed_type_pairs" in kwargs:
            kwargs["allowed_type_pairs"] = frozenset(
                canonical_pair(a, b) for a, b in kwargs["allowed_type_pairs"]
            )
        if "synonym_table" in kwargs:
            kwargs["synonym_table"] = {
                k: tuple(v) for k, v in kwargs["synonym_table"].items()
            }
        return cls(**kwargs)


def _stage_rng(cfg: PipelineConfig, stage: str) -> random.Random:
    # string seeding keeps the per-stage streams independent of one another
    return random.Random(f"{cfg.seed}:{stage}")


def mention_spans(sent: AnnotatedSentence) -> list[EntitySpan]:
    """Maximal runs of tokens sharing a non-outside NE label."""
    spans = []
    start = None
    for i, tok in enumerate(sent.tokens):
        label = tok.ner
        prev = sent.tokens[i - 1].ner if i else "O"
        if label != "O" and label != prev:
            if start is not None:
                spans.append(EntitySpan(start, i, prev))
            start = i
        elif label == "O" and start is not None:
            spans.append(EntitySpan(start, i, prev))
            start = None
    if start is not None:
        spans.append(EntitySpan(start, len(sent.tokens), sent.tokens[-1].ner))
    return spans


def sample_pairs(corpus: list[AnnotatedSentence], cfg: PipelineConfig) -> list[RelationInstance]:
    """One randomly chosen allowed (subject, object) pair per sentence."""
    rng = _stage_rng(cfg, "sample")
    out = []
    for sent in corpus:
        spans = mention_spans(sent)
        candidates = [
            (a, b)
            for a in spans
            for b in spans
            if a is not b and canonical_pair(a.etype, b.etype) in cfg.allowed_type_pairs
        ]
        if not candidates:
            continue
        subj, obj = rng.choice(candidates)
        out.append(
            RelationInstance(
                sentence=sent,
                subj=subj,
                obj=obj,
                id=f"{sent.id}:{subj.start}-{subj.end}:{obj.start}-{obj.end}",
            )
        )
    return out


def build_pairs(instances: Iterable[RelationInstance]) -> tuple[list[TrainingPair], int]:
    """TrainingPairs from instances; returns (pairs, skipped count)."""
    pairs = []
    skipped = 0
    for inst in instances:
        try:
            rule = generate_syntactic_rule(inst)
            sentence_text = mark_entities(inst)
        except (NoPathError, MarkedTextError):
            skipped += 1
            continue
        pairs.append(
            TrainingPair(
                rule_text=serialize_rule(rule),
                sentence_text=sentence_text,
                origin=SAMPLED,
                type_pair=canonical_pair(inst.subj.etype, inst.obj.etype),
                source=inst,
            )
        )
    return pairs, skipped


def dedup_and_subsample(pairs: list[TrainingPair], cfg: PipelineConfig) -> list[TrainingPair]:
    """Drop exact duplicates, then cap each type pair by seeded sampling."""
    seen: set[tuple[str, str]] = set()
    unique: list[TrainingPair] = []
    for p in pairs:
        key = (p.rule_text, p.sentence_text)
        if key in seen:
            continue
        seen.add(key)
        unique.append(p)

    groups: dict[tuple[str, str], list[int]] = {}
    for i, p in enumerate(unique):
        groups.setdefault(p.type_pair, []).append(i)
    rng = _stage_rng(cfg, "subsample")
    keep: set[int] = set()
    for tp, idxs in groups.items():  # insertion order keeps the rng stream stable
        if len(idxs) <= cfg.per_pair_cap:
            keep.update(idxs)
        else:
            keep.update(rng.sample(idxs, cfg.per_pair_cap))
    return [p for i, p in enumerate(unique) if i in keep]


def _marker_index_for_first_slot(rule: Rule, pair: TrainingPair) -> int:
    """Which of the two sentence markers the rule's first constraint binds.

    Syntactic rules read subject-to-object while markers sit in sentence
    order; surface rules already read left-to-right.
    """
    if rule.kind is RuleKind.SURFACE or pair.source is None:
        return 0
    return 0 if pair.source.subj.start < pair.source.obj.start else 1


def augment_entity_synonyms(
    pair: TrainingPair, cfg: PipelineConfig, rng: random.Random | None = None
) -> TrainingPair:
    """Swap entity types for synonyms, same draw in rule and marker.

    Each of the two entity slots is considered independently with
    probability cfg.augment_prob; slots whose type has no synonyms are left
    alone.  Lexicalized entity constraints (surface text rather than a type)
    never sit in the synonym table, so they pass through unchanged.
    """
    if rng is None:
        rng = _stage_rng(cfg, "augment")
    rule = parse_rule(pair.rule_text)
    segs = split_marked(pair.sentence_text)
    marker_positions = [i for i, s in enumerate(segs) if isinstance(s, MarkerSegment)]
    if len(marker_positions) != 2:
        raise MarkedTextError(f"expected 2 markers, found {len(marker_positions)}")

    first_marker = _marker_index_for_first_slot(rule, pair)
    slots = [
        (0, marker_positions[first_marker]),
        (len(rule.elements) - 1, marker_positions[1 - first_marker]),
    ]
    elements = list(rule.elements)
    source = pair.source
    changed = False
    for el_idx, seg_idx in slots:
        constraint = elements[el_idx]
        if constraint.attr != "ne":
            continue
        pool = synonyms_for(constraint.value, dict(cfg.synonym_table))
        if not pool:
            continue
        if rng.random() >= cfg.augment_prob:
            continue
        syn = rng.choice(list(pool))
        elements[el_idx] = replace(constraint, value=syn)
        seg = segs[seg_idx]
        segs[seg_idx] = MarkerSegment(etype=syn, tokens=seg.tokens)
        if source is not None:
            # keep the carried instance consistent with the new marker type
            first_is_subj = rule.kind is RuleKind.SYNTACTIC or _subj_is_left(source)
            which = "subj" if (el_idx == 0) == first_is_subj else "obj"
            span = getattr(source, which)
            source = replace(source, **{which: replace(span, etype=syn)})
        changed = True
    if not changed:
        return pair

    new_rule = Rule(kind=rule.kind, elements=tuple(elements))
    text = " ".join(
        " ".join(["#", "*", s.etype, "*", *s.tokens, "#"]) if isinstance(s, MarkerSegment) else s
        for s in segs
    )
    return replace(pair, rule_text=serialize_rule(new_rule), sentence_text=text, source=source)


def _subj_is_left(inst: RelationInstance) -> bool:
    return inst.subj.start < inst.obj.start


def paraphrase_count(text: str) -> int:
    """How many paraphrases to request, by sentence length."""
    n = len(text.split())
    if n <= 8:
        return 2
    if n <= 15:
        return 3
    if n <= 25:
        return 4
    return 5


def _occurrences(tokens: list[str], needle: list[str]) -> list[int]:
    if not needle or len(needle) > len(tokens):
        return []
    return [
        i for i in range(len(tokens) - len(needle) + 1) if tokens[i : i + len(needle)] == needle
    ]


def _remark(tokens: list[str], first: tuple[int, MarkerSegment], second: tuple[int, MarkerSegment]) -> str:
    out: list[str] = []
    pos = 0
    for start, seg in (first, second):
        out.extend(tokens[pos:start])
        out.extend(["#", "*", seg.etype, "*", *seg.tokens, "#"])
        pos = start + len(seg.tokens)
    out.extend(tokens[pos:])
    return " ".join(out)


def paraphrase_expand(pair: TrainingPair, paraphraser: Paraphraser, cfg: PipelineConfig) -> list[TrainingPair]:
    """Extra pairs from paraphrases of the unmarked sentence.

    A candidate survives only if each entity's surface string occurs exactly
    once (disjointly); entities are then re-marked where they were found.
    Two identical entity strings cannot be told apart, so those candidates
    are discarded wholesale.  Transport errors are logged and yield no
    expansions — the original pair always flows through separately.
    """
    markers = marker_segments(pair.sentence_text)
    if len(markers) != 2:
        raise MarkedTextError(f"expected 2 markers, found {len(markers)}")
    m1, m2 = markers
    plain = unmark(pair.sentence_text)
    text = " ".join(plain)
    e1, e2 = " ".join(m1.tokens), " ".join(m2.tokens)
    try:
        candidates = paraphraser.paraphrase(text, e1, e2, paraphrase_count(text))
    except Exception as exc:  # transport/protocol failures must not kill the run
        log.warning("paraphraser failed for %r: %s", text, exc)
        return []

    out = []
    for cand in candidates:
        toks = cand.split()
        occ1 = _occurrences(toks, list(m1.tokens))
        occ2 = _occurrences(toks, list(m2.tokens))
        if len(occ1) != 1 or len(occ2) != 1:
            continue
        s1, s2 = occ1[0], occ2[0]
        r1, r2 = range(s1, s1 + len(m1.tokens)), range(s2, s2 + len(m2.tokens))
        if set(r1) & set(r2):  # overlapping or identical entities: ambiguous
            continue
        first, second = sorted(((s1, m1), (s2, m2)), key=lambda t: t[0])
        out.append(
            TrainingPair(
                rule_text=pair.rule_text,
                sentence_text=_remark(toks, first, second),
                origin=PARAPHRASE,
                type_pair=pair.type_pair,
            )
        )
    return out


def run_pipeline(
    corpus: list[AnnotatedSentence],
    cfg: PipelineConfig,
    paraphraser: Paraphraser | None = None,
) -> tuple[list[TrainingPair], dict]:
    """All stages in order; returns (pairs, per-stage stats)."""
    stats: dict = {"sentences": len(corpus)}
    instances = sample_pairs(corpus, cfg)
    stats["sampled"] = len(instances)
    pairs, skipped = build_pairs(instances)
    stats["built"] = len(pairs)
    stats["generation_skipped"] = skipped

    if not cfg.no_preprocess:
        pairs = dedup_and_subsample(pairs, cfg)
    stats["after_preprocess"] = len(pairs)

    if not cfg.no_augment:
        rng = _stage_rng(cfg, "augment")
        pairs = [augment_entity_synonyms(p, cfg, rng) for p in pairs]
    stats["after_augment"] = len(pairs)

    do_para = cfg.paraphrase and not cfg.no_paraphrase and paraphraser is not None
    if do_para:
        expanded: list[TrainingPair] = []
        kept = 0
        for p in pairs:
            expanded.append(p)
            extra = paraphrase_expand(p, paraphraser, cfg)
            kept += len(extra)
            expanded.extend(extra)
        pairs = expanded
        stats["paraphrases_kept"] = kept
    stats["final"] = len(pairs)
    return pairs, stats


# ---------------------------------------------------------------------------
# dataset files: JSONL {rule, sentence, origin, type_pair}
# ---------------------------------------------------------------------------


def write_dataset(pairs: Iterable[TrainingPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(
                json.dumps(
                    {
                        "rule": p.rule_text,
                        "sentence": p.sentence_text,
                        "origin": p.origin,
                        "type_pair": list(p.type_pair),
                    }
                )
                + "\n"
            )


def load_dataset(path) -> list[TrainingPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out.append(
                TrainingPair(
                    rule_text=obj["rule"],
                    sentence_text=obj["sentence"],
                    origin=obj.get("origin", SAMPLED),
                    type_pair=tuple(obj.get("type_pair", ("", ""))),
                )
            )
    return out
