"""Event-sourced rule-editing sessions.

A session starts from a base snapshot (the rules generated from an episode
set's supports) and accumulates an ordered log of ADD/DELETE/MODIFY events.
Current state is a pure function of (snapshot, log): every mutation is
validated, appended, and then cross-checked by replaying the whole log —
replay divergence is a bug and raises immediately.

Visibility scoping mirrors how an analyst's edits should spread: a
support-derived rule exists only in episodes containing its source support,
an ADDed rule exists in every episode that carries its relation, and
DELETE/MODIFY keep the original rule's footprint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable

from .rules import parse_rule, serialize_rule
from .sieve import Episode, SupportRule, support_rules

ORIGIN_SUPPORT = "support"
ORIGIN_MANUAL = "manual"


class UnknownRuleError(KeyError):
    def __init__(self, rule_id: str):
        super().__init__(rule_id)
        self.rule_id = rule_id


class DuplicateRuleError(ValueError):
    def __init__(self, existing_id: str):
        super().__init__(f"an enabled rule with identical text exists: {existing_id}")
        self.existing_id = existing_id


@dataclass(frozen=True)
class RuleEntry:
    rule_id: str
    relation: str
    text: str  # canonical serialization
    enabled: bool = True
    origin: str = ORIGIN_SUPPORT
    source_instance_id: str | None = None

    def to_json(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "relation": self.relation,
            "text": self.text,
            "enabled": self.enabled,
            "origin": self.origin,
            "source_instance_id": self.source_instance_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RuleEntry":
        return cls(
            rule_id=obj["rule_id"],
            relation=obj["relation"],
            text=obj["text"],
            enabled=obj.get("enabled", True),
            origin=obj.get("origin", ORIGIN_SUPPORT),
            source_instance_id=obj.get("source_instance_id"),
        )


@dataclass(frozen=True)
class Event:
    op: str  # "add" | "delete" | "modify"
    rule_id: str
    relation: str | None = None
    text: str | None = None

    def to_json(self) -> dict:
        out = {"op": self.op, "rule_id": self.rule_id}
        if self.relation is not None:
            out["relation"] = self.relation
        if self.text is not None:
            out["text"] = self.text
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Event":
        return cls(
            op=obj["op"],
            rule_id=obj["rule_id"],
            relation=obj.get("relation"),
            text=obj.get("text"),
        )


def replay(base: Iterable[RuleEntry], log: Iterable[Event]) -> list[RuleEntry]:
    """Apply an event log to a snapshot; total over valid logs."""
    entries: dict[str, RuleEntry] = {e.rule_id: e for e in base}
    order: list[str] = [e.rule_id for e in base]
    for ev in log:
        if ev.op == "add":
            entries[ev.rule_id] = RuleEntry(
                rule_id=ev.rule_id,
                relation=ev.relation or "",
                text=ev.text or "",
                enabled=True,
                origin=ORIGIN_MANUAL,
            )
            order.append(ev.rule_id)
        elif ev.op == "delete":
            cur = entries.get(ev.rule_id)
            if cur is not None:
                entries[ev.rule_id] = replace(cur, enabled=False)
        elif ev.op == "modify":
            cur = entries.get(ev.rule_id)
            if cur is not None:
                entries[ev.rule_id] = replace(cur, text=ev.text or cur.text)
        else:
            raise ValueError(f"unknown event op {ev.op!r}")
    return [entries[rid] for rid in order]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class EditSession:
    id: str
    base: list[RuleEntry]
    log: list[Event] = field(default_factory=list)
    overrides: dict[str, float] = field(default_factory=dict)
    version: int = 0
    created: str = field(default_factory=_now)
    updated: str = field(default_factory=_now)

    def __post_init__(self):
        self._state = replay(self.base, self.log)

    def state(self) -> list[RuleEntry]:
        return list(self._state)

    def entry(self, rule_id: str) -> RuleEntry:
        for e in self._state:
            if e.rule_id == rule_id:
                return e
        raise UnknownRuleError(rule_id)

    def _apply(self, ev: Event) -> None:
        self.log.append(ev)
        self._state = replay(self._state, [ev])  # incremental
        # event-sourcing check: incremental and from-scratch replays agree
        if replay(self.base, self.log) != self._state:
            raise AssertionError("replay divergence after event")
        self.version += 1
        self.updated = _now()

    def add_rule(self, relation: str, rule_text: str) -> str:
        """Validate, reject duplicates of enabled rules, log the ADD."""
        if not relation:
            raise ValueError("relation must be non-empty")
        rule = parse_rule(rule_text)  # ParseError carries the offset
        canonical = serialize_rule(rule)
        for e in self._state:
            if e.enabled and e.relation == relation and e.text == canonical:
                raise DuplicateRuleError(e.rule_id)
        n_adds = sum(1 for ev in self.log if ev.op == "add")
        rule_id = f"add-{n_adds}"
        self._apply(Event(op="add", rule_id=rule_id, relation=relation, text=canonical))
        return rule_id

    def delete_rule(self, rule_id: str) -> None:
        """Disable the rule; deleting an already-disabled rule is a no-op
        that is still logged (idempotent acknowledgment)."""
        self.entry(rule_id)  # raises UnknownRuleError
        self._apply(Event(op="delete", rule_id=rule_id))

    def modify_rule(self, rule_id: str, rule_text: str) -> None:
        self.entry(rule_id)
        rule = parse_rule(rule_text)
        self._apply(Event(op="modify", rule_id=rule_id, text=serialize_rule(rule)))

    def set_override(self, relation: str, threshold: float | None) -> None:
        """Set or clear a per-relation threshold; bumps the version."""
        if threshold is None:
            self.overrides.pop(relation, None)
        else:
            if not 0.0 <= threshold <= 1.0:
                raise ValueError(f"threshold must be in [0,1], got {threshold}")
            self.overrides[relation] = threshold
        self.version += 1
        self.updated = _now()

    # -- visibility ---------------------------------------------------------

    def rules_for_episode(self, ep: Episode) -> list[SupportRule]:
        """The session's current rule set, scoped to one episode."""
        support_ids = {s.key() for s in ep.supports}
        relations = set(ep.relations())
        out = []
        for e in self._state:
            if e.origin == ORIGIN_SUPPORT:
                visible = e.source_instance_id in support_ids
            else:
                visible = e.relation in relations
            if not visible:
                continue
            out.append(
                SupportRule(
                    rule=parse_rule(e.text),
                    relation=e.relation,
                    source_instance_id=e.source_instance_id or e.rule_id,
                    enabled=e.enabled,
                    rule_id=e.rule_id,
                )
            )
        return out

    # -- persistence --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "base": [e.to_json() for e in self.base],
            "log": [ev.to_json() for ev in self.log],
            "overrides": dict(self.overrides),
            "version": self.version,
            "created": self.created,
            "updated": self.updated,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EditSession":
        return cls(
            id=obj["id"],
            base=[RuleEntry.from_json(e) for e in obj["base"]],
            log=[Event.from_json(ev) for ev in obj["log"]],
            overrides={k: float(v) for k, v in obj.get("overrides", {}).items()},
            version=int(obj.get("version", 0)),
            created=obj.get("created", _now()),
            updated=obj.get("updated", _now()),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "EditSession":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def base_snapshot(episodes: Iterable[Episode]) -> list[RuleEntry]:
    """One entry per distinct support instance across the episode set."""
    seen: dict[str, RuleEntry] = {}
    for ep in episodes:
        for sup in support_rules(ep):
            sid = sup.source_instance_id
            if sid in seen:
                continue
            seen[sid] = RuleEntry(
                rule_id=f"sup-{sid}",
                relation=sup.relation,
                text=serialize_rule(sup.rule),
                enabled=True,
                origin=ORIGIN_SUPPORT,
                source_instance_id=sid,
            )
    return list(seen.values())
