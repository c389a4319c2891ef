"""Strict rule matching over dependency-annotated instances.

Syntactic rules are matched by walking the dependency graph: start on any
token of the subject span, follow each step (``<`` toward a head, ``>``
toward a dependent) through tokens satisfying the interior constraints, and
finish on any token of the object span.  Surface rules instead require the
interior elements to cover exactly the tokens between the two spans, in
sentence order.

Entity constraints accept a span whose type equals the constraint value, or
— for lexicalized rules like ``[ne=Berlin]+`` — whose surface text equals
it.  Interior ``ne`` constraints likewise fall back to the token's surface
form, which is what lets generated rules keep working after their type
values have been swapped for synonyms that are not NE labels.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .corpus import AnnotatedSentence, EntitySpan, RelationInstance
from .rules import DepStep, Rule, RuleKind, TokenConstraint


@dataclass(frozen=True)
class MatchResult:
    matched: bool
    # syntactic witness: visited token indices (one per constraint) and the
    # edges traversed, as (head, dependent, label) triples
    path: tuple[int, ...] | None = None
    edges: tuple[tuple[int, int, str], ...] | None = None
    # surface witness: the [start, end) token window covering the match
    interval: tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return self.matched


NO_MATCH = MatchResult(matched=False)


def _fold(s: str) -> str:
    return s.casefold()


def _text_eq(a: str, b: str, case_sensitive: bool) -> bool:
    return a == b if case_sensitive else _fold(a) == _fold(b)


def span_text(sent: AnnotatedSentence, span: EntitySpan) -> str:
    return " ".join(t.text for t in sent.tokens[span.start : span.end])


def entity_constraint_ok(
    c: TokenConstraint, sent: AnnotatedSentence, span: EntitySpan, case_sensitive: bool = False
) -> bool:
    """Does a quantified entity constraint accept this span?"""
    if c.attr == "ne" and _fold(c.value) == _fold(span.etype):
        return True
    return _text_eq(c.value, span_text(sent, span), case_sensitive)


def _token_ok(c: TokenConstraint, sent: AnnotatedSentence, idx: int, case_sensitive: bool) -> bool:
    tok = sent.tokens[idx]
    if c.attr == "ne" and _fold(c.value) == _fold(tok.ner):
        return True
    return _text_eq(c.value, tok.text, case_sensitive)


def _adjacency(sent: AnnotatedSentence):
    up: dict[int, list[tuple[int, str]]] = defaultdict(list)  # dependent -> (head, label)
    down: dict[int, list[tuple[int, str]]] = defaultdict(list)  # head -> (dependent, label)
    for e in sent.edges:
        up[e.dependent].append((e.head, e.label))
        down[e.head].append((e.dependent, e.label))
    return up, down


def match_syntactic(rule: Rule, inst: RelationInstance, case_sensitive: bool = False) -> MatchResult:
    """Match a syntactic rule against an instance; returns a witness on success."""
    if rule.kind is not RuleKind.SYNTACTIC:
        raise ValueError("match_syntactic requires a syntactic rule")
    sent = inst.sentence
    if not entity_constraint_ok(rule.subj_constraint, sent, inst.subj, case_sensitive):
        return NO_MATCH
    if not entity_constraint_ok(rule.obj_constraint, sent, inst.obj, case_sensitive):
        return NO_MATCH

    steps: list[DepStep] = rule.steps()
    inner: list[TokenConstraint] = list(rule.elements[2:-1:2])  # type: ignore[arg-type]
    up, down = _adjacency(sent)
    obj_tokens = set(inst.obj.indices())
    n_steps = len(steps)

    # depth-first over (token, step position); a visited set keeps cycles in
    # the (multi)graph from looping
    def walk(tok: int, pos: int, seen: set[tuple[int, int]]):
        if (tok, pos) in seen:
            return None
        seen.add((tok, pos))
        step = steps[pos]
        if step.direction == "<":
            hops = [(head, (head, tok, lab)) for head, lab in up.get(tok, ()) if lab == step.label]
        else:
            hops = [(dep, (tok, dep, lab)) for dep, lab in down.get(tok, ()) if lab == step.label]
        for nxt, edge in hops:
            if pos == n_steps - 1:
                if nxt in obj_tokens:
                    return [tok, nxt], [edge]
                continue
            if not _token_ok(inner[pos], sent, nxt, case_sensitive):
                continue
            found = walk(nxt, pos + 1, seen)
            if found is not None:
                path, edges = found
                return [tok, *path], [edge, *edges]
        return None

    for start in inst.subj.indices():
        got = walk(start, 0, set())
        if got is not None:
            path, edges = got
            return MatchResult(matched=True, path=tuple(path), edges=tuple(edges))
    return NO_MATCH


def match_surface(rule: Rule, inst: RelationInstance, case_sensitive: bool = False) -> MatchResult:
    """Match a surface rule: first constraint on the left span, last on the
    right, interior elements covering the between-tokens one-for-one."""
    if rule.kind is not RuleKind.SURFACE:
        raise ValueError("match_surface requires a surface rule")
    sent = inst.sentence
    left, right = sorted((inst.subj, inst.obj), key=lambda s: s.start)
    if not entity_constraint_ok(rule.subj_constraint, sent, left, case_sensitive):
        return NO_MATCH
    if not entity_constraint_ok(rule.obj_constraint, sent, right, case_sensitive):
        return NO_MATCH
    inner: list[TokenConstraint] = list(rule.elements[1:-1])  # type: ignore[arg-type]
    gap = right.start - left.end
    if gap != len(inner):
        return NO_MATCH
    for off, c in enumerate(inner):
        if not _token_ok(c, sent, left.end + off, case_sensitive):
            return NO_MATCH
    return MatchResult(matched=True, interval=(left.start, right.end))


def matches(rule: Rule, inst: RelationInstance, case_sensitive: bool = False) -> MatchResult:
    if rule.kind is RuleKind.SYNTACTIC:
        return match_syntactic(rule, inst, case_sensitive)
    return match_surface(rule, inst, case_sensitive)


# ---------------------------------------------------------------------------
# corpus index for bulk matching
# ---------------------------------------------------------------------------


class CorpusIndex:
    """Inverted index over instances used to prune bulk rule matching.

    Keeps word -> instance positions, per-slot entity types and the set of
    known type labels; candidates it produces are a superset of the true
    matches, which ``find_matches`` then verifies one by one.
    """

    def __init__(self, instances: list[RelationInstance]):
        self.instances = instances
        self.word_to_pos: dict[str, set[int]] = defaultdict(set)
        self.subj_type: dict[str, set[int]] = defaultdict(set)
        self.obj_type: dict[str, set[int]] = defaultdict(set)
        self.any_type: dict[str, set[int]] = defaultdict(set)
        self.known_types: set[str] = set()
        for i, inst in enumerate(instances):
            for tok in inst.sentence.tokens:
                self.word_to_pos[_fold(tok.text)].add(i)
            st, ot = _fold(inst.subj.etype), _fold(inst.obj.etype)
            self.subj_type[st].add(i)
            self.obj_type[ot].add(i)
            self.any_type[st].add(i)
            self.any_type[ot].add(i)
            self.known_types.update((st, ot))

    def _literal_candidates(self, value: str) -> set[int] | None:
        """Positions whose sentence contains every word of `value`."""
        acc: set[int] | None = None
        for w in value.split():
            hit = self.word_to_pos.get(_fold(w), set())
            acc = hit.copy() if acc is None else acc & hit
            if not acc:
                return set()
        return acc

    def candidates(self, rule: Rule) -> set[int]:
        acc: set[int] | None = None

        def narrow(s: set[int] | None):
            nonlocal acc
            if s is None:
                return
            acc = s.copy() if acc is None else acc & s

        for slot, table in ((rule.subj_constraint, self.subj_type), (rule.obj_constraint, self.obj_type)):
            v = _fold(slot.value)
            if slot.attr == "ne" and v in self.known_types:
                # for surface rules the first/last constraints bind by
                # sentence order, not subj/obj, so fall back to either-slot
                narrow(table[v] if rule.kind is RuleKind.SYNTACTIC else self.any_type[v])
            else:
                narrow(self._literal_candidates(slot.value))
        for el in rule.elements[1:-1]:
            if isinstance(el, TokenConstraint) and el.attr == "word":
                narrow(self.word_to_pos.get(_fold(el.value), set()))
        if acc is None:
            return set(range(len(self.instances)))
        return acc


def find_matches(
    rule: Rule,
    instances: list[RelationInstance],
    case_sensitive: bool = False,
    index: CorpusIndex | None = None,
) -> list[tuple[str, MatchResult]]:
    """All matching instances, in corpus order, as (instance key, witness).

    Pass a prebuilt CorpusIndex when matching many rules against the same
    instances; pruning is only an optimization when case-insensitive
    matching is in effect (the index folds case).
    """
    if index is not None and index.instances is not instances:
        raise ValueError("index was built over a different instance list")
    if case_sensitive:
        cand = range(len(instances))
    else:
        if index is None:
            index = CorpusIndex(instances)
        cand = sorted(index.candidates(rule))
    out = []
    for i in cand:
        res = matches(rule, instances[i], case_sensitive)
        if res.matched:
            out.append((instances[i].key(), res))
    return out
