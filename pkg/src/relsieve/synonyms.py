"""Entity-type vocabulary: canonical names, sampling inventory, synonyms.

Type names are compared case-insensitively and a few ubiquitous short
labels (per, org, loc) are treated as aliases of their long forms.  The
pair inventory lists which (first entity, second entity) type combinations
are worth sampling when building training data; the synonym table drives
the type-replacement augmentation that keeps the semantic matcher from
keying on one fixed spelling of each type.
"""

from __future__ import annotations

import random

TYPE_ALIASES = {
    "per": "person",
    "org": "organization",
    "loc": "location",
    "gpe": "location",
}


def canonical_type(name: str) -> str:
    t = name.strip().lower().replace(" ", "_")
    return TYPE_ALIASES.get(t, t)


def canonical_pair(first: str, second: str) -> tuple[str, str]:
    return canonical_type(first), canonical_type(second)


ALLOWED_TYPE_PAIRS: frozenset[tuple[str, str]] = frozenset(
    {
        ("organization", "organization"),
        ("organization", "person"),
        ("organization", "country"),
        ("organization", "city"),
        ("organization", "state_or_province"),
        ("organization", "ideology"),
        ("organization", "location"),
        ("organization", "url"),
        ("organization", "email"),
        ("person", "organization"),
        ("person", "cause_of_death"),
        ("person", "nationality"),
        ("person", "country"),
        ("person", "location"),
        ("person", "city"),
        ("person", "state_or_province"),
        ("person", "ideology"),
        ("person", "criminal_charge"),
        ("person", "religion"),
        ("person", "email"),
        ("person", "money"),
        ("title", "person"),
        ("city", "organization"),
        ("city", "state_or_province"),
        ("person", "person"),
        ("person", "title"),
        ("person", "number"),
        ("country", "organization"),
        ("nationality", "person"),
        ("person", "date"),
        ("country", "person"),
        ("city", "person"),
        ("state_or_province", "person"),
        ("organization", "date"),
        ("number", "person"),
        ("date", "person"),
        ("organization", "number"),
        ("cause_of_death", "person"),
        ("date", "organization"),
        ("location", "organization"),
    }
)


def pair_allowed(first: str, second: str, allowed: frozenset[tuple[str, str]] = ALLOWED_TYPE_PAIRS) -> bool:
    return canonical_pair(first, second) in allowed


TYPE_SYNONYMS: dict[str, tuple[str, ...]] = {
    "organization": ("org", "company", "firm", "corporation", "enterprise"),
    "date": ("a specific date",),
    "person": ("per", "human", "human being", "individual"),
    "number": ("digits",),
    "title": ("designation", "formal designation"),
    "duration": ("time period",),
    "misc": ("miscellaneous",),
    "country": ("nation", "state", "territory"),
    "location": ("place", "area", "geographic area", "loc"),
    "cause_of_death": ("date of demise", "cause of death", "death cause", "mortal cause"),
    "city": ("municipality", "town", "populated urban area"),
    "nationality": ("citizenship",),
    "ordinal": ("ranking",),
    "state_or_province": ("region", "territorial division within a country"),
    "percent": ("percentage",),
    "money": ("currency",),
    "set": ("collection", "group of items"),
    "ideology": ("doctrine", "system of ideas and ideals"),
    "criminal_charge": ("accusation", "formal allegation"),
    "time": ("period", "time period"),
    "religion": ("belief", "faith", "spiritual belief", "worshipper"),
    "url": ("web address",),
    "email": ("electronic mail",),
    "handle": ("username", "personal identifier"),
}


def synonyms_for(name: str, table: dict[str, tuple[str, ...]] | None = None) -> tuple[str, ...]:
    """Synonym pool for a type; empty when the type has no table entry."""
    table = TYPE_SYNONYMS if table is None else table
    return table.get(canonical_type(name), ())


def draw_synonym(name: str, rng: random.Random, table: dict[str, tuple[str, ...]] | None = None) -> str:
    """Uniform synonym draw; returns the input unchanged for unknown types."""
    pool = synonyms_for(name, table)
    if not pool:
        return name
    return rng.choice(pool)
