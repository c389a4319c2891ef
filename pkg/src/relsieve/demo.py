"""A self-contained synthetic world for demos, benchmarks and tests.

Ten relations over seven entity types, each with a few canonical "support"
phrasings and some paraphrase-flavored "variant" phrasings, plus neutral
templates that express no relation at all.  Every template carries a small
hand-built dependency parse, so rule generation and strict matching work
exactly as they would on parsed text.

The world is split so the first five relations never co-occur with the last
five in an episode — edits to one group can be shown to leave the other
group's metrics untouched.  ``make_demo`` wires the whole thing together:
corpus → training pairs → trained encoder → tuned threshold → episode
files, all seeded and reproducible.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import AnnotatedSentence, DepEdge, EntitySpan, RelationInstance, Token, save_corpus
from .encoder import CachedEmbedder, HashedEncoder
from .evaluation import EvalSetup, tune_threshold
from .paraphrase import FixtureParaphraser
from .pipeline import PipelineConfig, run_pipeline, write_dataset
from .sieve import Episode, Mode, SieveConfig, save_episodes
from .training import TrainingConfig, train

DEMO_SEED = 42


@dataclass(frozen=True)
class Template:
    """A sentence skeleton with E1/E2 slots and a parse in pattern space.

    Edge indices refer to pattern positions; an entity slot's position
    stands for the span's head token (its last token) once instantiated.
    """

    pattern: tuple[str, ...]
    edges: tuple[tuple[int, int, str], ...]

    @classmethod
    def make(cls, text: str, edges: list[tuple[int, int, str]]) -> "Template":
        return cls(pattern=tuple(text.split()), edges=tuple(edges))


@dataclass(frozen=True)
class RelationSpec:
    name: str
    subj_type: str
    obj_type: str
    supports: tuple[Template, ...]
    variants: tuple[Template, ...]


def _t(text: str, edges: list[tuple[int, int, str]]) -> Template:
    return Template.make(text, edges)


_COPULAR_NOUN = [(3, 0, "nsubj"), (3, 1, "cop"), (3, 2, "det"), (3, 5, "nmod_of"), (5, 4, "case")]
_DOBJ = [(1, 0, "nsubj"), (1, 2, "dobj")]
_PASSIVE_NMOD = lambda label: [(2, 0, "nsubjpass"), (2, 1, "auxpass"), (2, 4, label), (4, 3, "case")]

RELATIONS: tuple[RelationSpec, ...] = (
    RelationSpec(
        "founder_of", "person", "organization",
        supports=(
            _t("E1 founded E2", _DOBJ),
            _t("E1 established E2", _DOBJ),
        ),
        variants=(
            _t("E1 is the founder of E2", _COPULAR_NOUN),
            _t("E1 set up E2", [(1, 0, "nsubj"), (1, 2, "compound_prt"), (1, 3, "dobj")]),
            _t("E2 was founded by E1", [(2, 0, "nsubjpass"), (2, 1, "auxpass"), (2, 4, "nmod_by"), (4, 3, "case")]),
            _t("E1 created E2", _DOBJ),
        ),
    ),
    RelationSpec(
        "subsidiary_of", "organization", "organization",
        supports=(
            _t("E1 is a subsidiary of E2", _COPULAR_NOUN),
            _t("E1 is a unit of E2", _COPULAR_NOUN),
        ),
        variants=(
            _t("E1 is owned by E2", [(2, 0, "nsubjpass"), (2, 1, "auxpass"), (2, 4, "nmod_by"), (4, 3, "case")]),
            _t("E1 operates as a division of E2",
               [(1, 0, "nsubj"), (1, 4, "nmod_as"), (4, 2, "case"), (4, 3, "det"), (4, 6, "nmod_of"), (6, 5, "case")]),
            # deliberately out of the paraphrase lexicon's reach: the shape an
            # analyst has to hand a rule for
            _t("E2 acquired E1", _DOBJ),
        ),
    ),
    RelationSpec(
        "born_in", "person", "city",
        supports=(
            _t("E1 was born in E2", _PASSIVE_NMOD("nmod_in")),
            _t("E1 is a native of E2", _COPULAR_NOUN),
        ),
        variants=(
            _t("E1 came into the world in E2",
               [(1, 0, "nsubj"), (1, 4, "nmod_into"), (4, 2, "case"), (4, 3, "det"), (1, 6, "nmod_in"), (6, 5, "case")]),
            _t("E1 's birthplace is E2",
               [(2, 0, "nmod_poss"), (0, 1, "case"), (4, 2, "nsubj"), (4, 3, "cop")]),
        ),
    ),
    RelationSpec(
        "spouse_of", "person", "person",
        supports=(
            _t("E1 is married to E2", _PASSIVE_NMOD("nmod_to")),
            _t("E1 married E2", _DOBJ),
        ),
        variants=(
            _t("E1 is the spouse of E2", _COPULAR_NOUN),
            _t("E1 wed E2", _DOBJ),
            _t("E1 and E2 tied the knot",
               [(3, 0, "nsubj"), (0, 2, "conj_and"), (0, 1, "cc"), (3, 5, "dobj"), (5, 4, "det")]),
        ),
    ),
    RelationSpec(
        "headquartered_in", "organization", "city",
        supports=(
            _t("E1 is headquartered in E2", _PASSIVE_NMOD("nmod_in")),
            _t("E1 is based in E2", _PASSIVE_NMOD("nmod_in")),
        ),
        variants=(
            _t("E1 operates from E2", [(1, 0, "nsubj"), (1, 3, "nmod_from"), (3, 2, "case")]),
            _t("E1 maintains headquarters in E2",
               [(1, 0, "nsubj"), (1, 2, "dobj"), (2, 4, "nmod_in"), (4, 3, "case")]),
        ),
    ),
    RelationSpec(
        "citizen_of", "person", "nationality",
        supports=(
            _t("E1 is a citizen of E2", _COPULAR_NOUN),
            _t("E1 holds E2 citizenship", [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "compound")]),
        ),
        variants=(
            _t("E1 is a national of E2", _COPULAR_NOUN),
            _t("E1 holds citizenship of E2",
               [(1, 0, "nsubj"), (1, 2, "dobj"), (2, 4, "nmod_of"), (4, 3, "case")]),
        ),
    ),
    RelationSpec(
        "holds_title", "person", "title",
        supports=(
            _t("E1 serves as E2", [(1, 0, "nsubj"), (1, 3, "nmod_as"), (3, 2, "case")]),
            _t("E1 holds the title of E2",
               [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (3, 5, "nmod_of"), (5, 4, "case")]),
        ),
        variants=(
            _t("E1 works as E2", [(1, 0, "nsubj"), (1, 3, "nmod_as"), (3, 2, "case")]),
            _t("E1 holds the post of E2",
               [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (3, 5, "nmod_of"), (5, 4, "case")]),
            _t("E1 was appointed E2", [(2, 0, "nsubjpass"), (2, 1, "auxpass"), (2, 3, "xcomp")]),
        ),
    ),
    RelationSpec(
        "born_on", "person", "date",
        supports=(
            _t("E1 was born on E2", _PASSIVE_NMOD("nmod_on")),
            _t("E1 's date of birth is E2",
               [(2, 0, "nmod_poss"), (0, 1, "case"), (2, 4, "nmod_of"), (4, 3, "case"), (6, 2, "nsubj"), (6, 5, "cop")]),
        ),
        variants=(
            _t("E1 came into the world on E2",
               [(1, 0, "nsubj"), (1, 4, "nmod_into"), (4, 2, "case"), (4, 3, "det"), (1, 6, "nmod_on"), (6, 5, "case")]),
            _t("E1 celebrates a birthday on E2",
               [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (1, 5, "nmod_on"), (5, 4, "case")]),
        ),
    ),
    RelationSpec(
        "founded_on", "organization", "date",
        supports=(
            _t("E1 was founded on E2", _PASSIVE_NMOD("nmod_on")),
            _t("E1 was established on E2", _PASSIVE_NMOD("nmod_on")),
        ),
        variants=(
            _t("E1 was started on E2", _PASSIVE_NMOD("nmod_on")),
            _t("E1 came into existence on E2",
               [(1, 0, "nsubj"), (1, 3, "nmod_into"), (3, 2, "case"), (1, 5, "nmod_on"), (5, 4, "case")]),
        ),
    ),
    RelationSpec(
        "earned", "person", "money",
        supports=(
            _t("E1 earned E2", _DOBJ),
            _t("E1 was paid E2", [(2, 0, "nsubjpass"), (2, 1, "auxpass"), (2, 3, "dobj")]),
        ),
        variants=(
            _t("E1 received E2", _DOBJ),
            _t("E1 took home E2", [(1, 0, "nsubj"), (1, 2, "advmod"), (1, 3, "dobj")]),
        ),
    ),
)

GROUP_A = tuple(r.name for r in RELATIONS[:5])
GROUP_B = tuple(r.name for r in RELATIONS[5:])

# relation-free sentences per type pair: these become gold-NO_RELATION
# queries and corpus filler
NEUTRAL: dict[tuple[str, str], tuple[Template, ...]] = {
    ("person", "organization"): (
        _t("E1 visited E2 last week",
           [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 4, "nmod_tmod"), (4, 3, "amod")]),
        _t("E1 criticized E2 in an interview",
           [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 5, "nmod_in"), (5, 3, "case"), (5, 4, "det")]),
    ),
    ("organization", "organization"): (
        _t("E1 competed with E2 for customers",
           [(1, 0, "nsubj"), (1, 3, "nmod_with"), (3, 2, "case"), (1, 5, "nmod_for"), (5, 4, "case")]),
        _t("E1 sued E2 over a patent dispute",
           [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 6, "nmod_over"), (6, 3, "case"), (6, 4, "det"), (6, 5, "compound")]),
    ),
    ("person", "city"): (
        _t("E1 spoke in E2 about the budget",
           [(1, 0, "nsubj"), (1, 3, "nmod_in"), (3, 2, "case"), (1, 6, "nmod_about"), (6, 4, "case"), (6, 5, "det")]),
        _t("E1 toured E2 with a delegation",
           [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 5, "nmod_with"), (5, 3, "case"), (5, 4, "det")]),
    ),
    ("person", "person"): (
        _t("E1 met E2 at a conference",
           [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 5, "nmod_at"), (5, 3, "case"), (5, 4, "det")]),
        _t("E1 praised E2 in a statement",
           [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 5, "nmod_in"), (5, 3, "case"), (5, 4, "det")]),
    ),
    ("organization", "city"): (
        _t("E1 sponsored a festival in E2",
           [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (1, 5, "nmod_in"), (5, 4, "case")]),
        _t("E1 held a conference in E2",
           [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (1, 5, "nmod_in"), (5, 4, "case")]),
    ),
    ("person", "nationality"): (
        _t("E1 studied E2 history", [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "compound")]),
        _t("E1 wrote about E2 culture", [(1, 0, "nsubj"), (1, 4, "nmod_about"), (4, 2, "case"), (4, 3, "compound")]),
    ),
    ("person", "title"): (
        _t("E1 declined the E2 offer", [(1, 0, "nsubj"), (1, 4, "dobj"), (4, 2, "det"), (4, 3, "compound")]),
        _t("E1 discussed the E2 vacancy", [(1, 0, "nsubj"), (1, 4, "dobj"), (4, 2, "det"), (4, 3, "compound")]),
    ),
    ("person", "date"): (
        _t("E1 gave a speech on E2",
           [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (1, 5, "nmod_on"), (5, 4, "case")]),
        _t("E1 hosted a dinner on E2",
           [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (1, 5, "nmod_on"), (5, 4, "case")]),
    ),
    ("organization", "date"): (
        _t("E1 held a meeting on E2",
           [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (1, 5, "nmod_on"), (5, 4, "case")]),
        _t("E1 published a report on E2",
           [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (1, 5, "nmod_on"), (5, 4, "case")]),
    ),
    ("person", "money"): (
        _t("E1 requested E2 for the project",
           [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 5, "nmod_for"), (5, 3, "case"), (5, 4, "det")]),
        _t("E1 mentioned E2 during the call",
           [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 5, "nmod_during"), (5, 3, "case"), (5, 4, "det")]),
    ),
}

# extra training-only shapes: diversify the rule space the encoder sees
FILLER: tuple[tuple[str, str, Template], ...] = (
    ("person", "organization", _t("E1 works for E2", [(1, 0, "nsubj"), (1, 3, "nmod_for"), (3, 2, "case")])),
    ("person", "organization", _t("E1 advises E2", _DOBJ)),
    ("organization", "person", _t("E1 hired E2", _DOBJ)),
    ("organization", "person", _t("E1 promoted E2", _DOBJ)),
    ("person", "city", _t("E1 lives in E2", [(1, 0, "nsubj"), (1, 3, "nmod_in"), (3, 2, "case")])),
    ("person", "city", _t("E1 retired to E2", [(1, 0, "nsubj"), (1, 3, "nmod_to"), (3, 2, "case")])),
    ("person", "person", _t("E1 mentored E2", _DOBJ)),
    ("person", "person", _t("E1 befriended E2", _DOBJ)),
    ("organization", "city", _t("E1 opened a factory in E2",
                                [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "det"), (1, 5, "nmod_in"), (5, 4, "case")])),
    ("person", "nationality", _t("E1 embraced E2 customs", [(1, 0, "nsubj"), (1, 3, "dobj"), (3, 2, "compound")])),
    ("person", "title", _t("E1 resigned as E2", [(1, 0, "nsubj"), (1, 3, "nmod_as"), (3, 2, "case")])),
    ("person", "date", _t("E1 retired on E2", [(1, 0, "nsubj"), (1, 3, "nmod_on"), (3, 2, "case")])),
    ("organization", "date", _t("E1 filed papers on E2",
                                [(1, 0, "nsubj"), (1, 2, "dobj"), (1, 4, "nmod_on"), (4, 3, "case")])),
    ("person", "money", _t("E1 donated E2", _DOBJ)),
    ("person", "money", _t("E1 invested E2", _DOBJ)),
)

_FIRST = ("Ava", "Noah", "Mia", "Leo", "Zoe", "Eli", "Ivy", "Max", "Ana", "Kai",
          "Lena", "Omar", "Rosa", "Finn", "Nora", "Hugo", "Iris", "Jude", "Vera", "Axel")
_LAST = ("Calder", "Mercer", "Vance", "Holt", "Ramsey", "Soto", "Keller", "Brant", "Ives", "Quill",
         "Farrow", "Lang", "Pryce", "Nash", "Orton", "Dray", "Whitlock", "Marsh", "Ellery", "Stone")

ENTITY_POOLS: dict[str, tuple[str, ...]] = {
    "person": tuple(f"{f} {l}" for f, l in zip(_FIRST, _LAST))
    + tuple(f"{f} {l}" for f, l in zip(_FIRST, _LAST[5:] + _LAST[:5])),
    "organization": (
        "Norvatek", "Bluepine Systems", "Quarrel Labs", "Halcyon Group", "Vextra",
        "Orin Industries", "Peakwater Media", "Sundial Analytics", "Ferrostar", "Lumen Forge",
        "Cobalt Works", "Trellis Partners", "Novaline", "Redquarry Holdings", "Glasswing Studio",
        "Ironvale", "Keystone Array", "Tidewater Logic", "Arbor Capital", "Zephyr Dynamics",
        "Quartzline", "Harrowgate Energy", "Silverbirch Foods", "Driftwood Press",
    ),
    "city": (
        "Virelle", "Stonecross", "Amberfield", "Lowry Bend", "Tarn Hollow", "Eastmere",
        "Vallonia", "Redgate", "Moorhaven", "Pellworth", "Sablecrest", "Winfall",
        "Northquay", "Dunmore Vale", "Oakhalt", "Brimsley",
    ),
    "nationality": (
        "Velandian", "Estrian", "Norlish", "Cavrene", "Ulmarine", "Tessian",
        "Brovian", "Quillish", "Ardalan", "Senterian", "Valdorian", "Morvic",
    ),
    "title": (
        "chief executive", "senior engineer", "managing editor", "finance director",
        "head coach", "lead archivist", "chief surgeon", "staff writer",
        "operations manager", "general counsel",
    ),
    "date": (
        "March 1931", "July 1998", "1987", "April 2004", "June 1984", "October 1952",
        "1969", "January 2011", "May 1976", "August 1933", "2019", "February 1990",
        "September 1961", "November 2007", "December 1945", "1900",
    ),
    "money": (
        "5 million dollars", "300,000 dollars", "12 million dollars", "2 billion dollars",
        "750,000 dollars", "40 million dollars", "1 million dollars", "88,000 dollars",
        "6 billion dollars", "250 million dollars",
    ),
}

RELATION_BY_NAME = {r.name: r for r in RELATIONS}


def instantiate(
    template: Template, sid: str, e1: str, e1_type: str, e2: str, e2_type: str,
    relation: str | None = None,
) -> RelationInstance:
    """Fill a template; E1 becomes the subject span, E2 the object span."""
    tokens: list[Token] = []
    spans: dict[str, EntitySpan] = {}
    anchor: list[int] = []
    for slot in template.pattern:
        if slot in ("E1", "E2"):
            text, etype = (e1, e1_type) if slot == "E1" else (e2, e2_type)
            parts = text.split()
            start = len(tokens)
            tokens.extend(Token(p, etype) for p in parts)
            spans[slot] = EntitySpan(start, len(tokens), etype)
            anchor.append(len(tokens) - 1)
        else:
            anchor.append(len(tokens))
            tokens.append(Token(slot, "O"))
    edges = [DepEdge(anchor[h], anchor[d], lab) for h, d, lab in template.edges]
    for span in spans.values():  # span-internal structure: head-final compounds
        for k in range(span.start, span.end - 1):
            edges.append(DepEdge(span.end - 1, k, "compound"))
    sent = AnnotatedSentence(id=sid, tokens=tuple(tokens), edges=tuple(edges))
    return RelationInstance(sentence=sent, subj=spans["E1"], obj=spans["E2"], relation=relation, id=sid)


def _pick_entities(rng: random.Random, subj_type: str, obj_type: str) -> tuple[str, str]:
    e1 = rng.choice(ENTITY_POOLS[subj_type])
    e2 = rng.choice(ENTITY_POOLS[obj_type])
    while e2 == e1:
        e2 = rng.choice(ENTITY_POOLS[obj_type])
    return e1, e2


def make_corpus(n_sentences: int = 1800, seed: int = DEMO_SEED) -> list[AnnotatedSentence]:
    """Sentences drawn uniformly over every template in the world."""
    menu: list[tuple[str, str, Template]] = []
    for r in RELATIONS:
        for tpl in r.supports + r.variants:
            menu.append((r.subj_type, r.obj_type, tpl))
    for pair, templates in NEUTRAL.items():
        for tpl in templates:
            menu.append((pair[0], pair[1], tpl))
    menu.extend(FILLER)

    rng = random.Random(f"{seed}:corpus")
    out = []
    for i in range(n_sentences):
        subj_type, obj_type, tpl = rng.choice(menu)
        e1, e2 = _pick_entities(rng, subj_type, obj_type)
        inst = instantiate(tpl, f"c{i}", e1, subj_type, e2, obj_type)
        out.append(inst.sentence)
    return out


def make_episodes(
    n_episodes: int = 200,
    k_shot: int = 5,
    seed: int = DEMO_SEED,
    positive_rate: float = 0.4,
    easy_rate: float = 0.2,
    tag: str = "e",
) -> list[Episode]:
    """Five-way episodes; first half over group A relations, second over B.

    A positive query is "easy" (same shape as some support, so a strict rule
    can fire) with probability easy_rate, otherwise it takes a variant
    shape.  Negative queries reuse the episode's own type pairs with neutral
    predicates, which is what makes abstention non-trivial.
    """
    rng = random.Random(f"{seed}:episodes:{tag}")
    episodes = []
    for i in range(n_episodes):
        group = GROUP_A if i < n_episodes / 2 else GROUP_B
        relations = [RELATION_BY_NAME[name] for name in group]
        ep_id = f"{tag}{i}"

        supports = []
        support_templates: dict[str, list[Template]] = {}
        for r in relations:
            chosen = [rng.choice(r.supports) for _ in range(k_shot)]
            support_templates[r.name] = chosen
            for k, tpl in enumerate(chosen):
                e1, e2 = _pick_entities(rng, r.subj_type, r.obj_type)
                supports.append(
                    instantiate(tpl, f"{ep_id}-sup-{r.name}-{k}", e1, r.subj_type, e2, r.obj_type, r.name)
                )

        if rng.random() < positive_rate:
            r = relations[rng.randrange(len(relations))]
            if rng.random() < easy_rate:
                tpl = rng.choice(support_templates[r.name])
            else:
                tpl = rng.choice(r.variants)
            e1, e2 = _pick_entities(rng, r.subj_type, r.obj_type)
            query = instantiate(tpl, f"{ep_id}-q", e1, r.subj_type, e2, r.obj_type, r.name)
        else:
            r = relations[rng.randrange(len(relations))]
            pair = (r.subj_type, r.obj_type)
            tpl = rng.choice(NEUTRAL[pair])
            e1, e2 = _pick_entities(rng, *pair)
            query = instantiate(tpl, f"{ep_id}-q", e1, pair[0], e2, pair[1], None)

        episodes.append(Episode(id=ep_id, query=query, supports=tuple(supports)))
    return episodes


def demo_pipeline_config(seed: int = DEMO_SEED) -> PipelineConfig:
    # higher augment probability than the library default: the demo wants a
    # diverse rule-text distribution for clean retrieval evaluation
    return PipelineConfig(seed=seed, augment_prob=0.5)


def demo_training_config(seed: int = DEMO_SEED) -> TrainingConfig:
    return TrainingConfig.desk(seed=seed)


def make_demo(outdir, seed: int = DEMO_SEED, n_sentences: int = 1800, n_episodes: int = 200) -> dict:
    """Build the full demo bundle on disk; returns its manifest."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)

    corpus = make_corpus(n_sentences=n_sentences, seed=seed)
    save_corpus(corpus, out / "corpus.jsonl")

    pairs, stats = run_pipeline(corpus, demo_pipeline_config(seed), FixtureParaphraser())
    write_dataset(pairs, out / "data.jsonl")

    encoder, steps = train(pairs, demo_training_config(seed))
    encoder.save(out / "model.npz")

    dev = make_episodes(n_episodes // 2, seed=seed, tag="d")
    eval_eps = make_episodes(n_episodes, seed=seed, tag="e")
    save_episodes(dev, out / "dev_episodes.jsonl")
    save_episodes(eval_eps, out / "episodes.jsonl")

    setup = EvalSetup(cfg=SieveConfig(mode=Mode.HYBRID), embedder=CachedEmbedder(encoder))
    threshold = tune_threshold(dev, setup, step=0.01)

    config = {"mode": "hybrid", "threshold": threshold, "seed": seed}
    (out / "config.json").write_text(json.dumps(config, indent=2))
    manifest = {
        "seed": seed,
        "sentences": len(corpus),
        "pairs": len(pairs),
        "pipeline_stats": stats,
        "training_steps": len(steps),
        "final_loss": steps[-1].loss if steps else None,
        "threshold": threshold,
        "episodes": len(eval_eps),
        "dev_episodes": len(dev),
        "files": ["corpus.jsonl", "data.jsonl", "model.npz", "episodes.jsonl", "dev_episodes.jsonl", "config.json"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def load_demo(bundle_dir):
    """(episodes, dev episodes, embedder, config dict) from a bundle dir."""
    from .sieve import load_episodes

    base = Path(bundle_dir)
    config = json.loads((base / "config.json").read_text())
    encoder = HashedEncoder.load(base / "model.npz")
    episodes = load_episodes(base / "episodes.jsonl")
    dev = load_episodes(base / "dev_episodes.jsonl")
    return episodes, dev, CachedEmbedder(encoder), config
