"""Paraphrase providers for the training-data pipeline.

The pipeline only needs ``paraphrase(text, entity1, entity2, n)`` returning
candidate rewrites of a plain (unmarked) sentence.  Two implementations:

* FixtureParaphraser — deterministic offline rewriter.  Seeded by a hash of
  the input sentence, it swaps predicate phrases using a small synonym
  lexicon and wraps sentences in reporting frames.  Entities are masked
  during rewriting so they survive verbatim.
* HttpParaphraser — posts a fixed prompt to a configurable endpoint, for
  plugging in a hosted model.  Non-deterministic; transport failures raise.
"""

from __future__ import annotations

import hashlib
import json
import random
from typing import Protocol, Sequence


class Paraphraser(Protocol):
    def paraphrase(self, text: str, entity1: str, entity2: str, n: int) -> list[str]:
        ...


class ParaphraseError(RuntimeError):
    """Transport or protocol failure while requesting paraphrases."""


# phrase -> alternatives; keys are matched longest-first on whole tokens
PHRASE_LEXICON: dict[str, tuple[str, ...]] = {
    "is a subsidiary of": ("is a unit of", "operates as a division of", "is owned by"),
    "is the founder of": ("founded", "established"),
    "holds the title of": ("serves as", "carries the designation of"),
    "is a citizen of": ("holds citizenship of", "is a national of"),
    "graduated from": ("got a degree from", "completed studies at"),
    "headquartered in": ("based in", "operating out of"),
    "is based in": ("operates from", "maintains headquarters in", "is headquartered in"),
    "was born in": ("is a native of", "came into the world in"),
    "was born on": ("came into the world on",),
    "was founded on": ("was started on", "came into existence on"),
    "works for": ("is employed by", "is on the payroll of"),
    "is married to": ("is wed to", "is the spouse of"),
    "moved to": ("relocated to", "settled in"),
    "serves as": ("works as", "holds the post of"),
    "died of": ("succumbed to", "passed away from"),
    "lives in": ("resides in", "makes a home in"),
    "founded": ("established", "created", "set up", "is the founder of"),
    "established": ("founded", "created"),
    "acquired": ("bought", "took over", "purchased"),
    "earned": ("was paid", "received", "took home"),
    "married": ("wed",),
    "visited": ("toured", "stopped by"),
    "met": ("met with", "sat down with"),
    "praised": ("commended", "spoke highly of"),
    "criticized": ("denounced", "took aim at"),
    "sued": ("filed suit against", "took legal action against"),
    "announced": ("unveiled", "made public"),
    "wrote": ("authored", "penned"),
    "opened": ("inaugurated", "launched"),
    "joined": ("signed on with", "became part of"),
    "leads": ("heads", "is in charge of"),
    "owns": ("controls", "is the owner of"),
}

WRAPPERS: tuple[str, ...] = (
    "According to the report , {text}",
    "{text} , sources said",
    "It was reported that {text}",
    "As noted earlier , {text}",
    "{text} , according to officials",
    "Records show that {text}",
    "Observers noted that {text}",
    "In short , {text}",
)

_E1 = ""
_E2 = ""


def _mask_entity(tokens: list[str], entity: str, placeholder: str) -> list[str]:
    """Replace the first whole-token occurrence of entity with a placeholder."""
    ent = entity.split()
    if not ent:
        return tokens
    for i in range(len(tokens) - len(ent) + 1):
        if tokens[i : i + len(ent)] == ent:
            return tokens[:i] + [placeholder] + tokens[i + len(ent) :]
    return tokens


def _substitutions(tokens: list[str]) -> list[list[str]]:
    """All single-phrase lexicon rewrites of a masked token list."""
    out: list[list[str]] = []
    keys = sorted(PHRASE_LEXICON, key=lambda k: -len(k.split()))
    for key in keys:
        kt = key.split()
        for i in range(len(tokens) - len(kt) + 1):
            if tokens[i : i + len(kt)] != kt:
                continue
            for alt in PHRASE_LEXICON[key]:
                out.append(tokens[:i] + alt.split() + tokens[i + len(kt) :])
            break  # one site per key is plenty of variety
    return out


class FixtureParaphraser:
    """Deterministic paraphraser used for tests, demos and offline runs.

    The candidate pool is every single predicate-phrase substitution plus the
    sentence in a few reporting-frame wrappers; a hash of the sentence seeds
    the order in which candidates are drawn, so results depend only on the
    arguments.
    """

    def paraphrase(self, text: str, entity1: str, entity2: str, n: int) -> list[str]:
        seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
        rng = random.Random(seed)
        tokens = text.split()
        masked = _mask_entity(tokens, entity1, _E1)
        masked = _mask_entity(masked, entity2, _E2)

        def unmask(toks: Sequence[str]) -> str:
            return " ".join(
                entity1 if t == _E1 else entity2 if t == _E2 else t for t in toks
            )

        candidates = [unmask(toks) for toks in _substitutions(masked)]
        rng.shuffle(candidates)
        wrappers = list(WRAPPERS)
        rng.shuffle(wrappers)
        candidates.extend(w.format(text=unmask(masked)) for w in wrappers)

        out: list[str] = []
        seen = {text}
        for cand in candidates:
            if cand in seen:
                continue
            seen.add(cand)
            out.append(cand)
            if len(out) >= n:
                break
        return out


# The prompt sent by the HTTP client.  Placeholders are spelled exactly as
# documented for the hosted paraphrasing setup, hence .replace() below
# rather than str.format().
PROMPT_TEMPLATE = (
    "Please generate a number of {how many} paraphrases for the following sentence. "
    'Please ensure the meaning and the message stays the same and these two entities are '
    'preserved in your generations: "{entity 1}", "{entity 2}".\n'
    "Please be concise.\n"
    "```\n"
    "{text}\n"
    "```\n"
    "1. "
)


def build_prompt(text: str, entity1: str, entity2: str, n: int) -> str:
    return (
        PROMPT_TEMPLATE.replace("{how many}", str(n))
        .replace("{entity 1}", entity1)
        .replace("{entity 2}", entity2)
        .replace("{text}", text)
    )


def _parse_numbered(block: str) -> list[str]:
    """Parse '1. ...' style completions, tolerating a missing first label."""
    out: list[str] = []
    for line in block.splitlines():
        line = line.strip()
        if not line:
            continue
        head, _, rest = line.partition(".")
        if head.isdigit() and rest.strip():
            out.append(rest.strip())
        elif not out:
            out.append(line)
    return out


class HttpParaphraser:
    """POSTs the paraphrasing prompt as JSON to ``endpoint``.

    Accepted response shapes: a JSON list of strings, ``{"paraphrases":
    [...]}`` or ``{"text": "1. ...\\n2. ..."}``.  Anything else, and any
    transport error, raises ParaphraseError.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def paraphrase(self, text: str, entity1: str, entity2: str, n: int) -> list[str]:
        import requests

        prompt = build_prompt(text, entity1, entity2, n)
        try:
            resp = requests.post(
                self.endpoint, json={"prompt": prompt, "n": n}, timeout=self.timeout
            )
            resp.raise_for_status()
            payload = resp.json()
        except (requests.RequestException, json.JSONDecodeError) as exc:
            raise ParaphraseError(f"paraphrase request failed: {exc}") from exc
        if isinstance(payload, list):
            return [str(p) for p in payload][:n]
        if isinstance(payload, dict):
            if isinstance(payload.get("paraphrases"), list):
                return [str(p) for p in payload["paraphrases"]][:n]
            if isinstance(payload.get("text"), str):
                return _parse_numbered(payload["text"])[:n]
        raise ParaphraseError(f"unrecognized paraphrase response: {type(payload).__name__}")
