"""Episodic evaluation: micro-P/R/F1, aggregation, threshold tuning.

Predictions of NO_RELATION never count as positives.  Micro averaging pools
counts over all episodes: precision is correct positives over predicted
positives, recall is correct positives over gold positives.  Thresholds are
tuned on a dev split by sweeping a grid over cached per-episode scores, so
the sweep costs one embedding pass regardless of grid resolution.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .encoder import Embedder
from .sieve import (
    NO_RELATION,
    Channel,
    Episode,
    Mode,
    Prediction,
    SieveConfig,
    SupportRule,
    classify,
    classify_hard,
    soft_scores,
    support_rules,
)
from .synonyms import canonical_pair


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    predicted_positive: int
    gold_positive: int
    correct_positive: int

    @classmethod
    def from_counts(cls, predicted: int, gold: int, correct: int) -> "Metrics":
        p = correct / predicted if predicted else 0.0
        r = correct / gold if gold else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f1, predicted, gold, correct)


def _gold(ep: Episode) -> str:
    return ep.query.relation or NO_RELATION


@dataclass
class EvalSetup:
    """Everything needed to score episodes.

    When external_rules is set they replace per-episode generation; an
    episode only sees external rules whose relation one of its supports
    carries, mirroring how ADDed workbench rules become visible.
    """

    cfg: SieveConfig
    embedder: Embedder | None = None
    external_rules: list[SupportRule] | None = None
    rules_for: Callable[[Episode], list[SupportRule]] | None = None

    def episode_rules(self, ep: Episode) -> list[SupportRule]:
        if self.rules_for is not None:
            return self.rules_for(ep)
        if self.external_rules is not None:
            allowed = set(ep.relations())
            return [r for r in self.external_rules if r.relation in allowed]
        return support_rules(ep)


@dataclass(frozen=True)
class EvaluationReport:
    overall: Metrics
    per_relation: dict[str, Metrics]
    predictions: tuple[tuple[str, Prediction], ...]


def run_evaluation(episodes: Sequence[Episode], setup: EvalSetup) -> EvaluationReport:
    preds: list[tuple[str, Prediction]] = []
    for ep in episodes:
        rules = setup.episode_rules(ep)
        preds.append((ep.id, classify(ep, rules, setup.cfg, setup.embedder)))
    return _report(episodes, preds)


def _report(episodes: Sequence[Episode], preds: list[tuple[str, Prediction]]) -> EvaluationReport:
    pp = gp = cp = 0
    relations: set[str] = set()
    for ep, (_, pred) in zip(episodes, preds):
        gold = _gold(ep)
        if gold != NO_RELATION:
            gp += 1
            relations.add(gold)
        if pred.relation != NO_RELATION:
            pp += 1
            relations.add(pred.relation)
            if pred.relation == gold:
                cp += 1
    per_relation = {}
    for rel in sorted(relations):
        rpp = rgp = rcp = 0
        for ep, (_, pred) in zip(episodes, preds):
            gold = _gold(ep)
            if pred.relation == rel:
                rpp += 1
                if gold == rel:
                    rcp += 1
            if gold == rel:
                rgp += 1
        per_relation[rel] = Metrics.from_counts(rpp, rgp, rcp)
    return EvaluationReport(
        overall=Metrics.from_counts(pp, gp, cp),
        per_relation=per_relation,
        predictions=tuple(preds),
    )


def evaluate_episodes(episodes: Sequence[Episode], setup: EvalSetup) -> Metrics:
    return run_evaluation(episodes, setup).overall


@dataclass(frozen=True)
class AggregateMetrics:
    mean_precision: float
    std_precision: float
    mean_recall: float
    std_recall: float
    mean_f1: float
    std_f1: float
    runs: int


def aggregate(runs: Sequence[Metrics]) -> AggregateMetrics:
    """Mean and sample standard deviation (n−1) per metric field."""
    if not runs:
        raise ValueError("aggregate needs at least one run")

    def stats(values: list[float]) -> tuple[float, float]:
        mean = sum(values) / len(values)
        if len(values) == 1:
            return mean, 0.0
        var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
        return mean, math.sqrt(var)

    mp, sp = stats([m.precision for m in runs])
    mr, sr = stats([m.recall for m in runs])
    mf, sf = stats([m.f1 for m in runs])
    return AggregateMetrics(mp, sp, mr, sr, mf, sf, len(runs))


# ---------------------------------------------------------------------------
# threshold tuning
# ---------------------------------------------------------------------------


def threshold_grid(step: float) -> list[float]:
    if not 0.0 < step < 1.0:
        raise ValueError(f"grid step must be in (0,1), got {step}")
    out = []
    i = 0
    while True:
        t = i * step
        if t > 1.0 + 1e-12:
            break
        out.append(min(round(t, 12), 1.0))
        i += 1
    return out


def _sweep_cache(episodes: Sequence[Episode], setup: EvalSetup):
    """Per-episode facts that make the grid sweep O(1) per point: gold label,
    whether hard already answers (hybrid only), and the best soft score."""
    hybrid = setup.cfg.mode is Mode.HYBRID
    cache = []
    for ep in episodes:
        rules = setup.episode_rules(ep)
        hard = None
        if hybrid:
            pred = classify_hard(ep, rules, setup.cfg, setup.embedder)
            hard = pred if pred.channel is Channel.HARD else None
        best = None  # (score, relation)
        if setup.embedder is not None:
            scores = soft_scores(ep, rules, setup.embedder)
            if scores:
                rel = min(scores, key=lambda r: (-scores[r][0], r))
                best = (scores[rel][0], rel)
        cache.append((_gold(ep), hard, best))
    return cache


def _counts_at(cache, t: float, overrides: dict[str, float]) -> tuple[int, int, int]:
    pp = gp = cp = 0
    for gold, hard, best in cache:
        if gold != NO_RELATION:
            gp += 1
        if hard is not None:
            predicted = hard.relation
        elif best is not None and best[0] >= overrides.get(best[1], t):
            predicted = best[1]
        else:
            predicted = NO_RELATION
        if predicted != NO_RELATION:
            pp += 1
            if predicted == gold:
                cp += 1
    return pp, gp, cp


def tune_threshold(episodes: Sequence[Episode], setup: EvalSetup, step: float = 0.01) -> float:
    """Grid value of t maximizing F1 in the setup's mode; ties → smallest t.

    Overrides in the setup keep their fixed values during the sweep; only
    the global threshold moves.
    """
    if setup.cfg.mode is Mode.HARD:
        raise ValueError("threshold tuning applies to soft or hybrid modes")
    cache = _sweep_cache(episodes, setup)
    best_t, best_f1 = 0.0, -1.0
    for t in threshold_grid(step):
        m = Metrics.from_counts(*_counts_at(cache, t, setup.cfg.overrides))
        if m.f1 > best_f1:
            best_t, best_f1 = t, m.f1
    return best_t


# ---------------------------------------------------------------------------
# entity-type baseline
# ---------------------------------------------------------------------------


def baseline_entity_type(ep: Episode) -> Prediction:
    """Predict by type-pair lookup over supports; majority, then lexicographic.

    This is the all-recall/no-precision reference point: it fires whenever
    any support shares the query's (subject, object) types.
    """
    qpair = canonical_pair(ep.query.subj.etype, ep.query.obj.etype)
    counts: dict[str, int] = {}
    for s in ep.supports:
        if canonical_pair(s.subj.etype, s.obj.etype) == qpair and s.relation:
            counts[s.relation] = counts.get(s.relation, 0) + 1
    if not counts:
        return Prediction(relation=NO_RELATION, score=0.0, matched_rule=None, channel=Channel.NONE)
    relation = min(counts, key=lambda r: (-counts[r], r))
    return Prediction(relation=relation, score=1.0, matched_rule=None, channel=Channel.HARD)


def evaluate_baseline(episodes: Sequence[Episode]) -> Metrics:
    preds = [(ep.id, baseline_entity_type(ep)) for ep in episodes]
    return _report(episodes, preds).overall


# ---------------------------------------------------------------------------
# ablation grid
# ---------------------------------------------------------------------------

ABLATION_ORDER = ("original", "no_paraphrase", "no_preprocess", "no_augment")


class AblationError(KeyError):
    pass


@dataclass(frozen=True)
class AblationRow:
    mode: str
    ablation: str
    metrics: AggregateMetrics


def run_ablation(
    models: dict[str, Embedder],
    episodes: Sequence[Episode],
    modes: Sequence[Mode],
    base_cfg: SieveConfig,
    runs: int = 5,
    seed: int = 0,
) -> list[AblationRow]:
    """One row per (mode, ablation): metrics over seeded episode resamplings.

    ``models`` maps each ablation name to the encoder trained under that
    single flag; a missing entry fails loudly with the cell name.
    """
    rows = []
    for mode in modes:
        for name in ABLATION_ORDER:
            if name not in models:
                raise AblationError(f"missing model for cell ({mode.value}, {name})")
            cfg = SieveConfig(
                mode=mode,
                threshold=base_cfg.threshold,
                overrides=dict(base_cfg.overrides),
                hard_tiebreak=base_cfg.hard_tiebreak,
                case_sensitive=base_cfg.case_sensitive,
            )
            setup = EvalSetup(cfg=cfg, embedder=models[name])
            per_run = []
            for k in range(runs):
                rng = random.Random(f"{seed}:ablation:{mode.value}:{name}:{k}")
                sample = [episodes[rng.randrange(len(episodes))] for _ in episodes]
                per_run.append(evaluate_episodes(sample, setup))
            rows.append(AblationRow(mode=mode.value, ablation=name, metrics=aggregate(per_run)))
    return rows
