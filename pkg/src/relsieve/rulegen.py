"""Generate rules from relation instances.

A syntactic rule is read off the shortest dependency path between the two
argument spans: the path's hops become ``<``/``>`` steps and the tokens in
between become word literals.  When several shortest paths exist the
lexicographically smallest hop sequence wins, so generation is a pure
function of the instance.  A surface rule is the fallback for disconnected
parses: the literal token window between the spans.
"""

from __future__ import annotations

import heapq
from collections import defaultdict
from itertools import count

from .corpus import AnnotatedSentence, EntitySpan, RelationInstance, validate_instance
from .rules import DepStep, Rule, TokenConstraint, build_rule


class NoPathError(ValueError):
    """No dependency path connects the two argument spans."""

    def __init__(self, instance_key: str):
        super().__init__(f"no dependency path between argument spans of {instance_key}")
        self.instance_key = instance_key


def head_of_span(sent: AnnotatedSentence, span: EntitySpan) -> int:
    """The span token governed from outside the span (rightmost such token);
    if every head lies inside, the rightmost span token."""
    inside = set(span.indices())
    governed_outside = set()
    for e in sent.edges:
        if e.dependent in inside and e.head not in inside:
            governed_outside.add(e.dependent)
    if governed_outside:
        return max(governed_outside)
    return span.end - 1


Hop = tuple[DepStep, int]  # step taken, node arrived at


def shortest_dep_path(sent: AnnotatedSentence, src: int, dst: int) -> list[Hop] | None:
    """Shortest undirected path from src to dst over the dependency graph.

    Hops are (step, node): ``<label`` when moving dependent -> head,
    ``>label`` when moving head -> dependent.  Ties on length are broken by
    the lexicographically smallest hop-key sequence, each key being
    (direction, label, node); uniform hop cost makes best-first search with
    that composite priority exact.
    """
    if src == dst:
        return []
    up = defaultdict(list)
    down = defaultdict(list)
    for e in sent.edges:
        up[e.dependent].append((e.head, e.label))
        down[e.head].append((e.dependent, e.label))

    tick = count()
    heap: list = [(0, (), next(tick), src, [])]
    settled: set[int] = set()
    while heap:
        length, key, _, node, path = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node == dst:
            return path
        moves = [("<", head, lab) for head, lab in up.get(node, ())]
        moves += [(">", dep, lab) for dep, lab in down.get(node, ())]
        for direction, nxt, lab in moves:
            if nxt in settled:
                continue
            hop_key = key + ((direction, lab, nxt),)
            hop = (DepStep(direction=direction, label=lab), nxt)
            heapq.heappush(heap, (length + 1, hop_key, next(tick), nxt, path + [hop]))
    return None


def generate_syntactic_rule(inst: RelationInstance, lexicalize: bool = False) -> Rule:
    """Rule along the shortest subject-head -> object-head dependency path.

    With ``lexicalize=True`` the entity constraints carry the span surface
    text instead of the entity type (useful for very specific rules).
    Raises NoPathError when the spans are not connected.
    """
    validate_instance(inst)
    sent = inst.sentence
    s_head = head_of_span(sent, inst.subj)
    o_head = head_of_span(sent, inst.obj)
    path = shortest_dep_path(sent, s_head, o_head)
    if path is None:
        raise NoPathError(inst.key())

    def entity_value(span: EntitySpan) -> str:
        return span.text(sent) if lexicalize else span.etype

    elements: list = [TokenConstraint("ne", entity_value(inst.subj), plus=True)]
    for step, node in path[:-1]:
        elements.append(step)
        elements.append(TokenConstraint("word", sent.tokens[node].text))
    if path:
        elements.append(path[-1][0])
    elements.append(TokenConstraint("ne", entity_value(inst.obj), plus=True))
    return build_rule(elements)


def generate_surface_rule(inst: RelationInstance, lexicalize: bool = False) -> Rule:
    """Rule over the literal token window between the two spans."""
    validate_instance(inst)
    sent = inst.sentence
    left, right = sorted((inst.subj, inst.obj), key=lambda s: s.start)

    def entity_value(span: EntitySpan) -> str:
        return span.text(sent) if lexicalize else span.etype

    elements: list = [TokenConstraint("ne", entity_value(left), plus=True)]
    for idx in range(left.end, right.start):
        elements.append(TokenConstraint("word", sent.tokens[idx].text))
    elements.append(TokenConstraint("ne", entity_value(right), plus=True))
    return build_rule(elements)


def generate_rule(inst: RelationInstance, lexicalize: bool = False) -> Rule:
    """Syntactic rule when the parse connects the spans, surface otherwise."""
    try:
        return generate_syntactic_rule(inst, lexicalize=lexicalize)
    except NoPathError:
        return generate_surface_rule(inst, lexicalize=lexicalize)
