"""Episode classification: strict rules first, semantic back-off second.

An episode carries one query instance and K labeled supports for each of N
relations.  Rules generated from the supports drive three modes:

* HARD — binary rule application; abstains unless a rule strict-matches.
* SOFT — best cosine similarity between any rule and the marked query,
  thresholded; below threshold means NO_RELATION.
* HYBRID — the sieve: take the hard answer when a rule fired, otherwise
  fall back to soft.

There is no learned abstention class anywhere; NO_RELATION only ever
arises from no rule firing or the threshold not being met.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .corpus import RelationInstance, instance_from_json, instance_to_json, mark_entities
from .encoder import Embedder
from .matching import matches
from .rulegen import NoPathError, generate_syntactic_rule
from .rules import Rule, parse_rule, serialize_rule

NO_RELATION = "no_relation"


class Mode(str, Enum):
    HARD = "hard"
    SOFT = "soft"
    HYBRID = "hybrid"


class HardTiebreak(str, Enum):
    BY_SOFT_SCORE = "by_soft_score"
    BY_MATCH_COUNT = "by_match_count"


class Channel(str, Enum):
    HARD = "hard"
    SOFT = "soft"
    NONE = "none"


@dataclass
class SupportRule:
    rule: Rule
    relation: str
    source_instance_id: str
    enabled: bool = True
    rule_id: str = ""

    def __post_init__(self):
        if not self.relation:
            raise ValueError("SupportRule needs a relation label")
        if not self.rule_id:
            self.rule_id = f"sup-{self.source_instance_id}"


@dataclass(frozen=True)
class Episode:
    id: str
    query: RelationInstance
    supports: tuple[RelationInstance, ...]

    def relations(self) -> list[str]:
        seen: list[str] = []
        for s in self.supports:
            if s.relation and s.relation not in seen:
                seen.append(s.relation)
        return seen


@dataclass
class SieveConfig:
    mode: Mode = Mode.HYBRID
    threshold: float = 0.5
    overrides: dict[str, float] = field(default_factory=dict)
    hard_tiebreak: HardTiebreak = HardTiebreak.BY_SOFT_SCORE
    case_sensitive: bool = False

    def __post_init__(self):
        for t in (self.threshold, *self.overrides.values()):
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"thresholds must be in [0,1], got {t}")

    def threshold_for(self, relation: str) -> float:
        return self.overrides.get(relation, self.threshold)


@dataclass(frozen=True)
class Prediction:
    relation: str
    score: float
    matched_rule: str | None
    channel: Channel


ABSTAIN = Prediction(relation=NO_RELATION, score=0.0, matched_rule=None, channel=Channel.NONE)


def support_rules(ep: Episode, skip_disconnected: bool = True) -> list[SupportRule]:
    """One rule per support instance, read off its dependency path."""
    out = []
    for s in ep.supports:
        if not s.relation:
            raise ValueError(f"support {s.key()} in episode {ep.id} has no relation label")
        try:
            rule = generate_syntactic_rule(s)
        except NoPathError:
            if skip_disconnected:
                continue
            raise
        out.append(SupportRule(rule=rule, relation=s.relation, source_instance_id=s.key()))
    return out


def classify_hard(
    ep: Episode,
    rules: list[SupportRule],
    cfg: SieveConfig,
    embedder: Embedder | None = None,
) -> Prediction:
    """Strict rule application over the query.

    With matches from several relations, BY_MATCH_COUNT takes the relation
    with most matching rules (lexicographic on ties); BY_SOFT_SCORE asks the
    embedder which matched rule sits closest to the query and is only legal
    when an embedder is on hand.
    """
    hits = [
        r for r in rules
        if r.enabled and matches(r.rule, ep.query, cfg.case_sensitive).matched
    ]
    if not hits:
        return ABSTAIN
    by_rel: dict[str, list[SupportRule]] = {}
    for r in hits:
        by_rel.setdefault(r.relation, []).append(r)
    if len(by_rel) == 1:
        relation, rs = next(iter(by_rel.items()))
        return Prediction(relation=relation, score=1.0, matched_rule=rs[0].rule_id, channel=Channel.HARD)
    if cfg.hard_tiebreak is HardTiebreak.BY_MATCH_COUNT:
        relation = min(by_rel, key=lambda rel: (-len(by_rel[rel]), rel))
        return Prediction(
            relation=relation, score=1.0, matched_rule=by_rel[relation][0].rule_id, channel=Channel.HARD
        )
    if embedder is None:
        raise ValueError("BY_SOFT_SCORE tie-break on a multi-relation hard tie requires an embedder")
    marked = mark_entities(ep.query)
    q = embedder.embed_sentence(marked)
    best = max(hits, key=lambda r: (float(embedder.embed_rule(serialize_rule(r.rule)) @ q), r.rule_id))
    return Prediction(relation=best.relation, score=1.0, matched_rule=best.rule_id, channel=Channel.HARD)


def soft_scores(
    ep: Episode, rules: list[SupportRule], embedder: Embedder
) -> dict[str, tuple[float, str]]:
    """Per relation: (best similarity over its enabled rules, that rule's id)."""
    marked = mark_entities(ep.query)
    q = embedder.embed_sentence(marked)
    out: dict[str, tuple[float, str]] = {}
    for r in rules:
        if not r.enabled:
            continue
        score = float(embedder.embed_rule(serialize_rule(r.rule)) @ q)
        prev = out.get(r.relation)
        if prev is None or score > prev[0]:
            out[r.relation] = (score, r.rule_id)
    return out


def classify_soft(
    ep: Episode, rules: list[SupportRule], embedder: Embedder, cfg: SieveConfig
) -> Prediction:
    scores = soft_scores(ep, rules, embedder)
    if not scores:
        return ABSTAIN
    relation = min(scores, key=lambda rel: (-scores[rel][0], rel))
    score, rule_id = scores[relation]
    if score >= cfg.threshold_for(relation):
        return Prediction(relation=relation, score=score, matched_rule=rule_id, channel=Channel.SOFT)
    return Prediction(relation=NO_RELATION, score=score, matched_rule=None, channel=Channel.NONE)


def classify_hybrid(
    ep: Episode, rules: list[SupportRule], embedder: Embedder, cfg: SieveConfig
) -> Prediction:
    hard = classify_hard(ep, rules, cfg, embedder)
    if hard.channel is Channel.HARD:
        return hard
    return classify_soft(ep, rules, embedder, cfg)


def classify(
    ep: Episode,
    rules: list[SupportRule],
    cfg: SieveConfig,
    embedder: Embedder | None = None,
) -> Prediction:
    if cfg.mode is Mode.HARD:
        return classify_hard(ep, rules, cfg, embedder)
    if embedder is None:
        raise ValueError(f"mode {cfg.mode.value} requires an embedder")
    if cfg.mode is Mode.SOFT:
        return classify_soft(ep, rules, embedder, cfg)
    return classify_hybrid(ep, rules, embedder, cfg)


# ---------------------------------------------------------------------------
# episode and prediction files
# ---------------------------------------------------------------------------


def episode_to_json(ep: Episode) -> dict:
    return {
        "id": ep.id,
        "query": instance_to_json(ep.query),
        "supports": [instance_to_json(s) for s in ep.supports],
    }


def episode_from_json(obj: dict) -> Episode:
    ep = Episode(
        id=str(obj["id"]),
        query=instance_from_json(obj["query"]),
        supports=tuple(instance_from_json(s) for s in obj["supports"]),
    )
    if not ep.supports:
        raise ValueError(f"episode {ep.id} has no supports")
    for s in ep.supports:
        if not s.relation:
            raise ValueError(f"episode {ep.id}: support {s.key()} lacks a relation label")
    return ep


def load_episodes(path) -> list[Episode]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(episode_from_json(json.loads(line)))
    return out


def save_episodes(episodes: Iterable[Episode], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ep in episodes:
            fh.write(json.dumps(episode_to_json(ep)) + "\n")


def prediction_to_json(episode_id: str, pred: Prediction) -> dict:
    return {
        "episode_id": episode_id,
        "relation": pred.relation,
        "score": pred.score,
        "channel": pred.channel.value,
        "rule_id": pred.matched_rule,
    }
