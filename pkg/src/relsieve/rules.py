"""The rule language: parsing, validation and canonical serialization.

A rule is a sequence of token constraints and dependency steps, e.g.

    [ne=per]+ <nsubj founded >dobj [ne=org]+
    [ne=person]+ graduated from [ne=organization]+

The first and last elements are always entity constraints quantified with
``+`` (they bind whole argument spans).  ``<label`` walks from a dependent
to its head, ``>label`` from a head to one of its dependents.  A bare word
is shorthand for ``[word=...]`` and must match a token's surface form.
Rules with at least one dependency step are syntactic; the rest are surface
rules whose elements must match a contiguous token window.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Union


class RuleKind(str, Enum):
    SYNTACTIC = "syntactic"
    SURFACE = "surface"


@dataclass(frozen=True)
class TokenConstraint:
    """Match one token (or, quantified with ``+``, one entity span)."""

    attr: str  # "ne" | "word"
    value: str
    plus: bool = False


@dataclass(frozen=True)
class DepStep:
    direction: str  # "<" (dependent -> head) | ">" (head -> dependent)
    label: str


RuleElement = Union[TokenConstraint, DepStep]

ATTRS = ("ne", "word")


@dataclass(frozen=True)
class Rule:
    kind: RuleKind
    elements: tuple[RuleElement, ...]

    @property
    def subj_constraint(self) -> TokenConstraint:
        return self.elements[0]  # type: ignore[return-value]

    @property
    def obj_constraint(self) -> TokenConstraint:
        return self.elements[-1]  # type: ignore[return-value]

    def steps(self) -> list[DepStep]:
        return [e for e in self.elements if isinstance(e, DepStep)]


class RuleError(ValueError):
    """A structurally invalid rule (offset unknown or not applicable)."""


class ParseError(RuleError):
    """Syntax error in rule text; carries the character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.message = message
        self.offset = offset


def _scan(text: str) -> list[tuple[RuleElement, int]]:
    """Tokenize rule text into elements, keeping each element's offset."""
    out: list[tuple[RuleElement, int]] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        start = i
        ch = text[i]
        if ch == "[":
            eq = text.find("=", i)
            close = text.find("]", i)
            if close < 0:
                raise ParseError("unclosed '['", start)
            if eq < 0 or eq > close:
                raise ParseError("constraint is missing '='", start)
            attr = text[i + 1 : eq].strip()
            if attr not in ATTRS:
                raise ParseError(f"unknown attribute {attr!r}", start)
            value = text[eq + 1 : close].strip()
            if not value:
                raise ParseError("empty constraint value", start)
            i = close + 1
            plus = i < n and text[i] == "+"
            if plus:
                i += 1
            out.append((TokenConstraint(attr=attr, value=value, plus=plus), start))
        elif ch in "<>":
            j = i + 1
            while j < n and not text[j].isspace():
                j += 1
            label = text[i + 1 : j]
            if not label:
                raise ParseError("dependency step is missing a label", start)
            out.append((DepStep(direction=ch, label=label), start))
            i = j
        else:
            # bare word literal; '+' only quantifies bracketed constraints,
            # so a trailing '+' here stays part of the word
            j = i
            while j < n and not text[j].isspace():
                j += 1
            out.append((TokenConstraint(attr="word", value=text[i:j]), start))
            i = j
    return out


def _validate(elements: list[tuple[RuleElement, int]], end: int) -> RuleKind:
    if not elements:
        raise ParseError("empty rule", 0)
    first, first_off = elements[0]
    last, last_off = elements[-1]
    if isinstance(last, DepStep):
        raise ParseError("dangling dependency step at end of rule", last_off)
    if not (isinstance(first, TokenConstraint) and first.plus):
        raise ParseError("rule must start with a quantified ('+') entity constraint", first_off)
    if len(elements) == 1:
        raise ParseError("rule needs two entity constraints", end)
    if not (isinstance(last, TokenConstraint) and last.plus):
        raise ParseError("rule must end with a quantified ('+') entity constraint", last_off)
    for el, off in elements[1:-1]:
        if isinstance(el, TokenConstraint) and el.plus:
            raise ParseError("'+' is only allowed on the two entity constraints", off)
    has_steps = any(isinstance(el, DepStep) for el, _ in elements)
    if has_steps:
        # strict alternation: constraint, step, constraint, step, ..., constraint
        if len(elements) % 2 == 0:
            raise ParseError("syntactic rule must alternate steps and token constraints", last_off)
        for idx, (el, off) in enumerate(elements):
            want_step = idx % 2 == 1
            if want_step and not isinstance(el, DepStep):
                raise ParseError("expected a dependency step here", off)
            if not want_step and isinstance(el, DepStep):
                raise ParseError("dependency step must be followed by a token constraint", off)
        return RuleKind.SYNTACTIC
    return RuleKind.SURFACE


def parse_rule(text: str) -> Rule:
    """Parse rule text; raises ParseError with a character offset on failure."""
    scanned = _scan(text)
    kind = _validate(scanned, len(text))
    return Rule(kind=kind, elements=tuple(el for el, _ in scanned))


_BARE_UNSAFE = ("[", "]", "<", ">")


def _serialize_element(el: RuleElement) -> str:
    if isinstance(el, DepStep):
        return f"{el.direction}{el.label}"
    suffix = "+" if el.plus else ""
    if el.attr == "word" and not el.plus:
        word = el.value
        bare_ok = bool(word) and not any(ch.isspace() for ch in word)
        bare_ok = bare_ok and word[0] not in _BARE_UNSAFE and "]" not in word
        if bare_ok:
            return word
    return f"[{el.attr}={el.value}]{suffix}"


def serialize_rule(rule: Rule) -> str:
    """Canonical text form: single-space separated, bare word literals."""
    return " ".join(_serialize_element(el) for el in rule.elements)


def rule_signature(rule: Rule) -> str:
    """Canonical identity string; equal signatures mean equal rules."""
    return serialize_rule(rule)


def build_rule(elements: Iterable[RuleElement]) -> Rule:
    """Construct and validate a rule from already-built elements."""
    els = [(el, i) for i, el in enumerate(elements)]
    kind = _validate(els, len(els))
    return Rule(kind=kind, elements=tuple(el for el, _ in els))


# ---------------------------------------------------------------------------
# Rule files: TSV with columns  relation <TAB> rule <TAB> provenance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuleRecord:
    relation: str
    rule: Rule
    provenance: str = ""


def load_rules_tsv(path) -> list[RuleRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#\t"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise RuleError(f"{path}:{lineno}: expected relation<TAB>rule[<TAB>provenance]")
            relation, text = parts[0].strip(), parts[1]
            provenance = parts[2] if len(parts) > 2 else ""
            try:
                rule = parse_rule(text)
            except ParseError as exc:
                raise RuleError(f"{path}:{lineno}: {exc}") from exc
            out.append(RuleRecord(relation=relation, rule=rule, provenance=provenance))
    return out


def save_rules_tsv(records: Iterable[RuleRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(f"{rec.relation}\t{serialize_rule(rec.rule)}\t{rec.provenance}\n")
