"""Shared test material: hand-built dependency parses, seeded random
generators, and independent match oracles.

The oracles re-derive the documented matching semantics with a different
algorithm (layered set reachability instead of depth-first search), so a
bug in the matcher cannot hide in a mirrored oracle.
"""

from __future__ import annotations

import random

from relsieve.corpus import (
    AnnotatedSentence,
    DepEdge,
    EntitySpan,
    RelationInstance,
    Token,
)
from relsieve.rules import DepStep, Rule, RuleKind, TokenConstraint

# ---------------------------------------------------------------------------
# hand-authored parses
#
# Three small sentences with fully specified dependency graphs.  They cover
# the three classic shapes: transitive verb, copular noun predicate, and
# prepositional attachment.
# ---------------------------------------------------------------------------


def founding_instance() -> RelationInstance:
    """'Bill Gates founded Microsoft' — transitive verb."""
    sent = AnnotatedSentence(
        id="fx-founding",
        tokens=(
            Token("Bill", "per"),
            Token("Gates", "per"),
            Token("founded", "O"),
            Token("Microsoft", "org"),
        ),
        edges=(
            DepEdge(2, 1, "nsubj"),
            DepEdge(2, 3, "dobj"),
            DepEdge(1, 0, "compound"),
        ),
    )
    return RelationInstance(
        sentence=sent,
        subj=EntitySpan(0, 2, "per"),
        obj=EntitySpan(3, 4, "org"),
        relation="org:founder",
        id="fx-founding",
    )


def founder_instance() -> RelationInstance:
    """'Bill Gates is the founder of Microsoft' — copular noun predicate."""
    sent = AnnotatedSentence(
        id="fx-founder",
        tokens=(
            Token("Bill", "per"),
            Token("Gates", "per"),
            Token("is", "O"),
            Token("the", "O"),
            Token("founder", "O"),
            Token("of", "O"),
            Token("Microsoft", "org"),
        ),
        edges=(
            DepEdge(4, 1, "nsubj"),
            DepEdge(4, 2, "cop"),
            DepEdge(4, 3, "det"),
            DepEdge(4, 6, "nmod_of"),
            DepEdge(6, 5, "case"),
            DepEdge(1, 0, "compound"),
        ),
    )
    return RelationInstance(
        sentence=sent,
        subj=EntitySpan(0, 2, "per"),
        obj=EntitySpan(6, 7, "org"),
        relation="org:founder",
        id="fx-founder",
    )


def moved_instance() -> RelationInstance:
    """'John moved to New York City' — prepositional attachment."""
    sent = AnnotatedSentence(
        id="fx-moved",
        tokens=(
            Token("John", "per"),
            Token("moved", "O"),
            Token("to", "O"),
            Token("New", "loc"),
            Token("York", "loc"),
            Token("City", "loc"),
        ),
        edges=(
            DepEdge(1, 0, "nsubj"),
            DepEdge(1, 5, "nmod_to"),
            DepEdge(5, 2, "case"),
            DepEdge(5, 3, "compound"),
            DepEdge(5, 4, "compound"),
        ),
    )
    return RelationInstance(
        sentence=sent,
        subj=EntitySpan(0, 1, "per"),
        obj=EntitySpan(3, 6, "loc"),
        relation=None,
        id="fx-moved",
    )


FOUNDED_RULE_TEXT = "[ne=per]+ <nsubj founded >dobj [ne=org]+"

# Canonical rule strings exercising every corner of the language: both
# kinds, long step chains, lexicalized entity constraints, and identical
# entity types on both ends.
REFERENCE_RULES = (
    "[ne=per]+ <nsubj founded >dobj [ne=org]+",
    "[ne=per]+ <nsubj founder >nmod_of [ne=org]+",
    "[ne=per]+ <nsubj moved >nmod_to [ne=loc]+",
    "[ne=per]+ <nsubj founded >nmod_in [ne=org]+",
    "[ne=human]+ <nsubj founded >nmod_in [ne=company]+",
    "[ne=org]+ <nmod_from taken >conj_and operating >nmod_under brandname >compound [ne=org]+",
    "[ne=org]+ >appos subsidiary >nmod_of [ne=org]+",
    "[ne=person]+ >appos son >nmod_of [ne=person]+",
    "[ne=person]+ graduated from [ne=organization]+",
    "[ne=location]+ <appos [ne=location]+",
    "[ne=Wynwood]+ <appos [ne=Miami]+",
    "[ne=Berlin]+ <appos [ne=Germany]+",
)


# ---------------------------------------------------------------------------
# seeded random generators
# ---------------------------------------------------------------------------

WORDS = ("founded", "acquired", "visited", "met", "led", "of", "in", "chief")
NE_TYPES = ("per", "org", "loc", "date")
DEP_LABELS = ("nsubj", "dobj", "nmod_of", "nmod_in", "appos", "compound", "conj_and")


def random_instance(rng: random.Random, max_tokens: int = 12) -> RelationInstance:
    """A random annotated sentence with two disjoint entity spans.

    Words, NE labels and edge labels are drawn from small pools so that
    random rules collide with them often enough to produce real matches.
    Edges form an arbitrary labeled multigraph (cycles included), which is
    exactly what the matcher documents it can take.
    """
    n = rng.randint(4, max_tokens)
    tokens = tuple(
        Token(rng.choice(WORDS), rng.choice(NE_TYPES) if rng.random() < 0.5 else "O")
        for _ in range(n)
    )
    edges = set()
    for _ in range(rng.randint(n - 1, 2 * n)):
        head = rng.randrange(n)
        dep = rng.randrange(n)
        if head == dep:
            continue
        edges.add(DepEdge(head, dep, rng.choice(DEP_LABELS)))
    # two disjoint spans: four sorted cut points
    while True:
        a, b = sorted(rng.sample(range(n + 1), 2))
        c, d = sorted(rng.sample(range(n + 1), 2))
        if a < b <= c < d:
            break
    spans = [EntitySpan(a, b, rng.choice(NE_TYPES)), EntitySpan(c, d, rng.choice(NE_TYPES))]
    rng.shuffle(spans)
    subj, obj = spans
    sent = AnnotatedSentence(id=f"rnd-{rng.randrange(10**9)}", tokens=tokens, edges=tuple(sorted(
        edges, key=lambda e: (e.head, e.dependent, e.label)
    )))
    return RelationInstance(sentence=sent, subj=subj, obj=obj)


def _random_entity_constraint(rng: random.Random) -> TokenConstraint:
    if rng.random() < 0.8:
        return TokenConstraint("ne", rng.choice(NE_TYPES), plus=True)
    return TokenConstraint("word", rng.choice(WORDS).title(), plus=True)


def _random_inner_constraint(rng: random.Random) -> TokenConstraint:
    if rng.random() < 0.5:
        return TokenConstraint("word", rng.choice(WORDS))
    return TokenConstraint("ne", rng.choice(NE_TYPES))


def random_syntactic_rule(rng: random.Random, max_steps: int = 4) -> Rule:
    n_steps = rng.randint(1, max_steps)
    elements = [_random_entity_constraint(rng)]
    for i in range(n_steps):
        elements.append(DepStep(rng.choice("<>"), rng.choice(DEP_LABELS)))
        if i < n_steps - 1:
            elements.append(_random_inner_constraint(rng))
    elements.append(_random_entity_constraint(rng))
    return Rule(kind=RuleKind.SYNTACTIC, elements=tuple(elements))


def random_surface_rule(rng: random.Random, max_inner: int = 4) -> Rule:
    elements = [_random_entity_constraint(rng)]
    for _ in range(rng.randint(0, max_inner)):
        elements.append(_random_inner_constraint(rng))
    elements.append(_random_entity_constraint(rng))
    return Rule(kind=RuleKind.SURFACE, elements=tuple(elements))


def derived_syntactic_rule(
    rng: random.Random, inst: RelationInstance, max_steps: int = 4
) -> Rule | None:
    """A rule read off an actual walk of the instance's graph.

    Purely random rules almost never match random sentences, which would
    leave agreement tests exercising only the trivial negative region.
    Walking the real graph from the subject span to the object span yields
    rules that genuinely match; callers then perturb them for near-misses.
    Returns None when no subject-to-object walk of usable length exists.
    """
    sent = inst.sentence
    moves: dict[int, list[tuple[str, str, int]]] = {}
    for e in sent.edges:
        moves.setdefault(e.dependent, []).append(("<", e.label, e.head))
        moves.setdefault(e.head, []).append((">", e.label, e.dependent))
    obj_tokens = set(inst.obj.indices())

    def explore(tok: int, hops: list[tuple[str, str, int]]):
        if hops and tok in obj_tokens:
            return hops
        if len(hops) >= max_steps:
            return None
        options = list(moves.get(tok, ()))
        rng.shuffle(options)
        for direction, label, nxt in options:
            found = explore(nxt, hops + [(direction, label, nxt)])
            if found is not None:
                return found
        return None

    starts = list(inst.subj.indices())
    rng.shuffle(starts)
    walk = None
    for start in starts:
        walk = explore(start, [])
        if walk is not None:
            break
    if walk is None:
        return None

    def span_constraint(span: EntitySpan) -> TokenConstraint:
        if rng.random() < 0.8:
            return TokenConstraint("ne", span.etype, plus=True)
        text = " ".join(t.text for t in sent.tokens[span.start : span.end])
        return TokenConstraint("ne", text, plus=True)

    elements: list = [span_constraint(inst.subj)]
    for i, (direction, label, landed) in enumerate(walk):
        elements.append(DepStep(direction, label))
        if i < len(walk) - 1:
            tok = sent.tokens[landed]
            if tok.ner != "O" and rng.random() < 0.4:
                elements.append(TokenConstraint("ne", tok.ner))
            else:
                elements.append(TokenConstraint("word", tok.text))
    elements.append(span_constraint(inst.obj))
    return Rule(kind=RuleKind.SYNTACTIC, elements=tuple(elements))


def perturb_rule(rng: random.Random, rule: Rule) -> Rule:
    """Flip one element of a rule: a near-miss (or accidental re-match)."""
    elements = list(rule.elements)
    idx = rng.randrange(len(elements))
    el = elements[idx]
    if isinstance(el, DepStep):
        if rng.random() < 0.5:
            elements[idx] = DepStep("<" if el.direction == ">" else ">", el.label)
        else:
            elements[idx] = DepStep(el.direction, rng.choice(DEP_LABELS))
    else:
        pool = NE_TYPES if el.attr == "ne" else WORDS
        elements[idx] = TokenConstraint(el.attr, rng.choice(pool), plus=el.plus)
    return Rule(kind=rule.kind, elements=tuple(elements))


def mixed_case(rng: random.Random, inst: RelationInstance) -> Rule:
    """The generator mix used by matcher agreement tests: walk-derived
    positives, their perturbations, and purely random rules."""
    roll = rng.random()
    if roll < 0.45:
        derived = derived_syntactic_rule(rng, inst)
        if derived is not None:
            return perturb_rule(rng, derived) if rng.random() < 0.5 else derived
    if roll < 0.8:
        return random_syntactic_rule(rng)
    return random_surface_rule(rng)


_VALUE_ALPHABET = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.'"


def _random_value(rng: random.Random, allow_space: bool) -> str:
    """A constraint value; occasionally multi-word or leading with a
    character that forces the bracketed serialization."""
    word = "".join(rng.choice(_VALUE_ALPHABET) for _ in range(rng.randint(1, 8)))
    roll = rng.random()
    if allow_space and roll < 0.15:
        second = "".join(rng.choice(_VALUE_ALPHABET) for _ in range(rng.randint(1, 6)))
        return f"{word} {second}"
    if roll > 0.9:
        return rng.choice("<>[") + word
    return word


def random_rule_ast(rng: random.Random, max_steps: int = 5) -> Rule:
    """An arbitrary valid rule AST for serialization round-trips.

    Values stay clear of ']' (the one character the text form cannot
    carry) but otherwise roam much wider than the realistic generators
    above: multi-word values, bracket-forcing prefixes, mixed case.
    """

    def entity() -> TokenConstraint:
        attr = "ne" if rng.random() < 0.7 else "word"
        return TokenConstraint(attr, _random_value(rng, allow_space=True), plus=True)

    def inner() -> TokenConstraint:
        attr = "ne" if rng.random() < 0.4 else "word"
        return TokenConstraint(attr, _random_value(rng, allow_space=attr == "ne"), plus=False)

    elements: list = [entity()]
    if rng.random() < 0.5:
        n_steps = rng.randint(1, max_steps)
        for i in range(n_steps):
            label = "".join(rng.choice(_VALUE_ALPHABET) for _ in range(rng.randint(1, 8)))
            elements.append(DepStep(rng.choice("<>"), label))
            if i < n_steps - 1:
                elements.append(inner())
        kind = RuleKind.SYNTACTIC
    else:
        for _ in range(rng.randint(0, 4)):
            elements.append(inner())
        kind = RuleKind.SURFACE
    elements.append(entity())
    return Rule(kind=kind, elements=tuple(elements))


# ---------------------------------------------------------------------------
# independent match oracles
# ---------------------------------------------------------------------------


def _fold_eq(a: str, b: str, case_sensitive: bool) -> bool:
    return a == b if case_sensitive else a.casefold() == b.casefold()


def oracle_entity_ok(
    c: TokenConstraint, inst: RelationInstance, span: EntitySpan, case_sensitive: bool = False
) -> bool:
    if c.attr == "ne" and c.value.casefold() == span.etype.casefold():
        return True
    text = " ".join(t.text for t in inst.sentence.tokens[span.start : span.end])
    return _fold_eq(c.value, text, case_sensitive)


def _oracle_token_ok(
    c: TokenConstraint, inst: RelationInstance, idx: int, case_sensitive: bool
) -> bool:
    tok = inst.sentence.tokens[idx]
    if c.attr == "ne" and c.value.casefold() == tok.ner.casefold():
        return True
    return _fold_eq(c.value, tok.text, case_sensitive)


def oracle_match_syntactic(rule: Rule, inst: RelationInstance, case_sensitive: bool = False) -> bool:
    """Layered reachability: the set of tokens reachable after each step.

    A syntactic rule matches iff some walk exists from a subject-span token
    through the steps (interior constraints on every intermediate landing)
    into an object-span token.  Because the step index advances by one per
    hop, walk existence reduces to per-layer reachable sets.
    """
    if not oracle_entity_ok(rule.elements[0], inst, inst.subj, case_sensitive):
        return False
    if not oracle_entity_ok(rule.elements[-1], inst, inst.obj, case_sensitive):
        return False
    steps = [e for e in rule.elements if isinstance(e, DepStep)]
    inner = [e for e in rule.elements[1:-1] if isinstance(e, TokenConstraint)]
    frontier = set(inst.subj.indices())
    for i, step in enumerate(steps):
        landed = set()
        for tok in frontier:
            for e in inst.sentence.edges:
                if e.label != step.label:
                    continue
                if step.direction == "<" and e.dependent == tok:
                    landed.add(e.head)
                elif step.direction == ">" and e.head == tok:
                    landed.add(e.dependent)
        if i < len(steps) - 1:
            landed = {t for t in landed if _oracle_token_ok(inner[i], inst, t, case_sensitive)}
        frontier = landed
        if not frontier:
            return False
    return bool(frontier & set(inst.obj.indices()))


def oracle_match_surface(rule: Rule, inst: RelationInstance, case_sensitive: bool = False) -> bool:
    """Surface semantics re-derived directly: the left span satisfies the
    first constraint, the right span the last, and the interior constraints
    cover the gap tokens one-for-one."""
    if inst.subj.start < inst.obj.start:
        left, right = inst.subj, inst.obj
    else:
        left, right = inst.obj, inst.subj
    if not oracle_entity_ok(rule.elements[0], inst, left, case_sensitive):
        return False
    if not oracle_entity_ok(rule.elements[-1], inst, right, case_sensitive):
        return False
    inner = list(rule.elements[1:-1])
    between = list(range(left.end, right.start))
    if len(between) != len(inner):
        return False
    return all(
        _oracle_token_ok(c, inst, idx, case_sensitive) for c, idx in zip(inner, between)
    )


def oracle_match(rule: Rule, inst: RelationInstance, case_sensitive: bool = False) -> bool:
    if rule.kind is RuleKind.SYNTACTIC:
        return oracle_match_syntactic(rule, inst, case_sensitive)
    return oracle_match_surface(rule, inst, case_sensitive)
