"""Micro metrics, threshold tuning against a brute-force sweep, baselines."""

from __future__ import annotations

import dataclasses
import statistics

import numpy as np
import pytest

from relsieve.corpus import (
    AnnotatedSentence,
    DepEdge,
    EntitySpan,
    RelationInstance,
    Token,
    mark_entities,
)
from relsieve.evaluation import (
    ABLATION_ORDER,
    AblationError,
    EvalSetup,
    Metrics,
    aggregate,
    baseline_entity_type,
    evaluate_baseline,
    evaluate_episodes,
    run_ablation,
    run_evaluation,
    threshold_grid,
    tune_threshold,
)
from relsieve.sieve import (
    NO_RELATION,
    Channel,
    Episode,
    Mode,
    SieveConfig,
    SupportRule,
    support_rules,
)
from relsieve.rules import parse_rule


def _inst(sid, subj, stype, verb, obj, otype, relation=None):
    sent = AnnotatedSentence(
        id=sid,
        tokens=(Token(subj, stype), Token(verb, "O"), Token(obj, otype)),
        edges=(DepEdge(1, 0, "nsubj"), DepEdge(1, 2, "dobj")),
    )
    return RelationInstance(
        sent, EntitySpan(0, 1, stype), EntitySpan(2, 3, otype), relation=relation, id=sid
    )


SUPPORT_A = _inst("sa", "Ava", "person", "founded", "Vextra", "organization", "rel_a")
SUPPORT_B = _inst("sb", "Quorix", "organization", "acquired", "Halden", "organization", "rel_b")

RULE_A = SupportRule(
    rule=parse_rule("[ne=person]+ <nsubj founded >dobj [ne=organization]+"),
    relation="rel_a",
    source_instance_id="sa",
)
RULE_B = SupportRule(
    rule=parse_rule("[ne=organization]+ <nsubj acquired >dobj [ne=organization]+"),
    relation="rel_b",
    source_instance_id="sb",
)


def _episode(eid, query):
    return Episode(id=eid, query=query, supports=(SUPPORT_A, SUPPORT_B))


def test_metrics_from_counts_hand_math():
    m = Metrics.from_counts(predicted=4, gold=5, correct=3)
    assert m.precision == pytest.approx(3 / 4)
    assert m.recall == pytest.approx(3 / 5)
    assert m.f1 == pytest.approx(2 * (3 / 4) * (3 / 5) / (3 / 4 + 3 / 5))
    assert (m.predicted_positive, m.gold_positive, m.correct_positive) == (4, 5, 3)


def test_metrics_zero_denominators():
    assert Metrics.from_counts(0, 5, 0).precision == 0.0
    assert Metrics.from_counts(5, 0, 0).recall == 0.0
    assert Metrics.from_counts(0, 0, 0).f1 == 0.0


def test_report_counts_and_per_relation_keys():
    episodes = [
        _episode("e1", _inst("q1", "Al", "person", "founded", "Box", "organization", "rel_a")),
        _episode("e2", _inst("q2", "Cox", "organization", "acquired", "Dux", "organization", "rel_a")),
        _episode("e3", _inst("q3", "Eb", "person", "started", "Fip", "organization", "rel_b")),
        _episode("e4", _inst("q4", "Gil", "person", "founded", "Hox", "organization", None)),
        _episode("e5", _inst("q5", "Ira", "person", "visited", "Jot", "organization", None)),
    ]
    setup = EvalSetup(cfg=SieveConfig(mode=Mode.HARD), rules_for=lambda ep: [RULE_A, RULE_B])
    report = run_evaluation(episodes, setup)
    # e1 hit, e2 strict-matches the wrong relation, e3 abstains,
    # e4 is a false positive on an unlabeled query, e5 abstains correctly
    assert report.overall == Metrics.from_counts(predicted=3, gold=3, correct=1)
    assert sorted(report.per_relation) == ["rel_a", "rel_b"]
    assert report.per_relation["rel_a"] == Metrics.from_counts(2, 2, 1)
    assert report.per_relation["rel_b"] == Metrics.from_counts(1, 1, 0)
    assert [eid for eid, _ in report.predictions] == ["e1", "e2", "e3", "e4", "e5"]
    assert report.predictions[2][1].relation == NO_RELATION
    assert evaluate_episodes(episodes, setup) == report.overall


def test_abstention_is_never_a_positive():
    episodes = [
        _episode("e1", _inst("q1", "Al", "person", "waved", "Box", "organization", None)),
        _episode("e2", _inst("q2", "Cy", "person", "left", "Dex", "organization", None)),
    ]
    setup = EvalSetup(cfg=SieveConfig(mode=Mode.HARD), rules_for=lambda ep: [RULE_A])
    report = run_evaluation(episodes, setup)
    assert report.overall == Metrics.from_counts(0, 0, 0)
    assert report.per_relation == {}


def test_external_rules_are_scoped_to_episode_relations():
    query = _inst("q", "Cox", "organization", "acquired", "Dux", "organization", "rel_b")
    only_a = Episode(id="e", query=query, supports=(SUPPORT_A,))
    setup = EvalSetup(cfg=SieveConfig(mode=Mode.HARD), external_rules=[RULE_A, RULE_B])
    # rel_b is not among the episode's support relations, so RULE_B is invisible
    assert setup.episode_rules(only_a) == [RULE_A]
    assert evaluate_episodes([only_a], setup) == Metrics.from_counts(0, 1, 0)

    both = _episode("e2", query)
    assert setup.episode_rules(both) == [RULE_A, RULE_B]
    assert evaluate_episodes([both], setup) == Metrics.from_counts(1, 1, 1)


def test_rules_for_hook_takes_precedence():
    ep = _episode("e", _inst("q", "Al", "person", "founded", "Box", "organization", "rel_a"))
    setup = EvalSetup(
        cfg=SieveConfig(mode=Mode.HARD), external_rules=[RULE_B], rules_for=lambda e: [RULE_A]
    )
    assert setup.episode_rules(ep) == [RULE_A]


def test_default_rules_come_from_supports():
    ep = _episode("e", _inst("q", "Al", "person", "founded", "Box", "organization", "rel_a"))
    setup = EvalSetup(cfg=SieveConfig(mode=Mode.HARD))
    assert [r.rule_id for r in setup.episode_rules(ep)] == ["sup-sa", "sup-sb"]


def test_aggregate_matches_statistics_module():
    runs = [
        Metrics.from_counts(4, 4, 2),
        Metrics.from_counts(8, 4, 4),
        Metrics.from_counts(4, 8, 3),
    ]
    agg = aggregate(runs)
    for field, values in (
        ("precision", [m.precision for m in runs]),
        ("recall", [m.recall for m in runs]),
        ("f1", [m.f1 for m in runs]),
    ):
        assert getattr(agg, f"mean_{field}") == pytest.approx(statistics.mean(values))
        assert getattr(agg, f"std_{field}") == pytest.approx(statistics.stdev(values))
    assert agg.runs == 3


def test_aggregate_single_run_and_empty():
    one = aggregate([Metrics.from_counts(2, 2, 1)])
    assert (one.std_precision, one.std_recall, one.std_f1) == (0.0, 0.0, 0.0)
    assert one.runs == 1
    with pytest.raises(ValueError):
        aggregate([])


def test_threshold_grid_contents():
    assert threshold_grid(0.25) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert threshold_grid(0.3) == [0.0, 0.3, 0.6, 0.9]
    fine = threshold_grid(0.01)
    assert len(fine) == 101
    assert fine[0] == 0.0 and fine[-1] == 1.0
    assert all(b > a for a, b in zip(fine, fine[1:]))
    for bad in (0.0, -0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            threshold_grid(bad)


class FakeEmbedder:
    def __init__(self, table):
        self.table = dict(table)
        self.fallback = np.array([0.0, 0.0, 0.0, 1.0])

    def _get(self, text):
        return self.table.get(text, self.fallback)

    embed_rule = _get
    embed_sentence = _get


def _scored_world(specs):
    """Episodes whose two soft scores are dictated per query.

    specs: list of (gold_relation, score_a, score_b, verb).  Strict matches
    happen only when the verb is 'founded' or 'acquired'.
    """
    episodes = []
    table = {}
    base_rules = support_rules(_episode("probe", _inst("probe", "X", "person", "y", "Z", "organization")))
    from relsieve.rules import serialize_rule

    table[serialize_rule(base_rules[0].rule)] = np.array([1.0, 0.0, 0.0, 0.0])
    table[serialize_rule(base_rules[1].rule)] = np.array([0.0, 1.0, 0.0, 0.0])
    for i, (gold, sa, sb, verb) in enumerate(specs):
        subj_type = "organization" if verb == "acquired" else "person"
        query = _inst(f"q{i}", f"Subj{i}", subj_type, verb, f"Obj{i}", "organization", gold)
        rest = np.sqrt(max(0.0, 1.0 - sa * sa - sb * sb))
        table[mark_entities(query)] = np.array([sa, sb, rest, 0.0])
        episodes.append(_episode(f"e{i}", query))
    return episodes, FakeEmbedder(table)


def _oracle_tune(episodes, setup, step):
    """Re-runs the complete evaluation at every grid point."""
    best_t, best_f1 = None, -1.0
    for t in threshold_grid(step):
        cfg = dataclasses.replace(setup.cfg, threshold=t)
        m = evaluate_episodes(episodes, EvalSetup(cfg=cfg, embedder=setup.embedder))
        if m.f1 > best_f1:
            best_t, best_f1 = t, m.f1
    return best_t


TUNING_SPECS = [
    ("rel_a", 0.90, 0.10, "launched"),
    ("rel_a", 0.70, 0.20, "built"),
    ("rel_a", 0.45, 0.10, "opened"),
    ("rel_b", 0.20, 0.80, "bought"),
    ("rel_b", 0.10, 0.55, "swallowed"),
    ("rel_b", 0.60, 0.30, "absorbed"),
    (None, 0.35, 0.20, "visited"),
    (None, 0.55, 0.10, "praised"),
    (None, 0.05, 0.02, "left"),
    ("rel_a", 0.30, 0.25, "grew"),
]


@pytest.mark.parametrize("step", [0.05, 0.02])
def test_tuned_threshold_equals_brute_force_soft(step):
    episodes, emb = _scored_world(TUNING_SPECS)
    setup = EvalSetup(cfg=SieveConfig(mode=Mode.SOFT, threshold=0.5), embedder=emb)
    assert tune_threshold(episodes, setup, step=step) == _oracle_tune(episodes, setup, step)


def test_tuned_threshold_equals_brute_force_hybrid():
    specs = TUNING_SPECS + [("rel_a", 0.0, 0.0, "founded"), ("rel_b", 0.0, 0.0, "acquired")]
    episodes, emb = _scored_world(specs)
    setup = EvalSetup(cfg=SieveConfig(mode=Mode.HYBRID, threshold=0.5), embedder=emb)
    assert tune_threshold(episodes, setup, step=0.05) == _oracle_tune(episodes, setup, step=0.05)


def test_tuning_tie_takes_the_smallest_threshold():
    episodes, emb = _scored_world([("rel_a", 0.90, 0.0, "grew"), (None, 0.10, 0.0, "left")])
    setup = EvalSetup(cfg=SieveConfig(mode=Mode.SOFT), embedder=emb)
    t = tune_threshold(episodes, setup, step=0.05)
    assert t == _oracle_tune(episodes, setup, 0.05)
    # F1 is 1.0 on every grid point above the distractor's 0.10 and below
    # 0.90; the tie must resolve to the smallest such point.
    assert t == pytest.approx(0.15)


def test_tuning_rejects_hard_mode():
    episodes, emb = _scored_world(TUNING_SPECS[:2])
    with pytest.raises(ValueError, match="soft or hybrid"):
        tune_threshold(episodes, EvalSetup(cfg=SieveConfig(mode=Mode.HARD), embedder=emb))


def test_soft_positive_set_shrinks_as_threshold_rises():
    episodes, emb = _scored_world(TUNING_SPECS)
    previous = None
    for t in threshold_grid(0.05):
        cfg = SieveConfig(mode=Mode.SOFT, threshold=t)
        report = run_evaluation(episodes, EvalSetup(cfg=cfg, embedder=emb))
        positives = {eid for eid, p in report.predictions if p.relation != NO_RELATION}
        if previous is not None:
            assert positives <= previous
        previous = positives


def test_baseline_majority_then_lexicographic():
    query = _inst("q", "Al", "person", "met", "Box", "organization")
    supports = (
        _inst("s1", "A", "person", "x", "B", "organization", "rel_b"),
        _inst("s2", "C", "person", "x", "D", "organization", "rel_b"),
        _inst("s3", "E", "person", "x", "F", "organization", "rel_a"),
        _inst("s4", "G", "location", "x", "H", "organization", "rel_c"),
    )
    pred = baseline_entity_type(Episode(id="e", query=query, supports=supports))
    assert pred.relation == "rel_b"  # two votes beat one; rel_c has the wrong pair
    assert pred.channel is Channel.HARD

    tied = baseline_entity_type(Episode(id="e", query=query, supports=supports[1:3]))
    assert tied.relation == "rel_a"  # 1-1 vote, lexicographically first wins


def test_baseline_is_alias_insensitive():
    query = _inst("q", "Al", "per", "met", "Box", "org")
    support = _inst("s", "A", "person", "x", "B", "organization", "rel_a")
    pred = baseline_entity_type(Episode(id="e", query=query, supports=(support,)))
    assert pred.relation == "rel_a"


def test_baseline_abstains_without_a_matching_pair():
    query = _inst("q", "Al", "person", "met", "Box", "location")
    support = _inst("s", "A", "person", "x", "B", "organization", "rel_a")
    pred = baseline_entity_type(Episode(id="e", query=query, supports=(support,)))
    assert pred.relation == NO_RELATION
    assert pred.channel is Channel.NONE


def test_evaluate_baseline_counts():
    episodes = [
        Episode(
            id="e1",
            query=_inst("q1", "Al", "person", "met", "Box", "organization", "rel_a"),
            supports=(_inst("s1", "A", "person", "x", "B", "organization", "rel_a"),),
        ),
        Episode(
            id="e2",
            query=_inst("q2", "Cy", "person", "met", "Dex", "organization", "rel_b"),
            supports=(_inst("s2", "A", "person", "x", "B", "organization", "rel_a"),),
        ),
        Episode(
            id="e3",
            query=_inst("q3", "Eb", "person", "met", "Fip", "location", None),
            supports=(_inst("s3", "A", "person", "x", "B", "organization", "rel_a"),),
        ),
    ]
    assert evaluate_baseline(episodes) == Metrics.from_counts(predicted=2, gold=2, correct=1)


def test_ablation_requires_every_model():
    episodes, emb = _scored_world(TUNING_SPECS[:4])
    models = {name: emb for name in ABLATION_ORDER if name != "no_augment"}
    with pytest.raises(AblationError, match="no_augment"):
        run_ablation(models, episodes, [Mode.SOFT], SieveConfig(threshold=0.4))


def test_ablation_rows_are_ordered_and_deterministic():
    episodes, emb = _scored_world(TUNING_SPECS)
    models = {name: emb for name in ABLATION_ORDER}
    kwargs = dict(
        models=models,
        episodes=episodes,
        modes=[Mode.SOFT, Mode.HYBRID],
        base_cfg=SieveConfig(threshold=0.4),
        runs=3,
        seed=7,
    )
    rows = run_ablation(**kwargs)
    assert [(r.mode, r.ablation) for r in rows] == [
        (m, a) for m in ("soft", "hybrid") for a in ABLATION_ORDER
    ]
    assert all(r.metrics.runs == 3 for r in rows)
    assert rows == run_ablation(**kwargs)
