"""In-memory triple store: file ingestion, exact entity lookup, neighborhood
recall, and linearization of recalled edges into knowledge strings."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .textpipe.tokenizer import tokenize

log = logging.getLogger(__name__)

_NT_ROW = re.compile(
    r'^\s*<([^>]+)>\s+<([^>]+)>\s+(?:<([^>]+)>|"((?:[^"\\]|\\.)*)")\s*\.\s*$')


def _norm(text: str) -> str:
    return " ".join(text.lower().split())


@dataclass(frozen=True)
class Triple:
    head: str
    relation: str
    tail: str

    def __post_init__(self):
        if not (self.head.strip() and self.relation.strip() and self.tail.strip()):
            raise ValueError(f"triple fields must be non-empty: {self!r}")

    def key(self) -> tuple[str, str, str]:
        return (_norm(self.head), _norm(self.relation), _norm(self.tail))


@dataclass(frozen=True)
class Edge:
    """One recalled neighborhood entry."""
    direction: str  # "out" | "in"
    relation: str
    neighbor: str


class TripleStore:
    """Immutable after construction; lookups are exact on lowercase names."""

    def __init__(self, triples: Iterable[Triple] = ()):
        self.triples: list[Triple] = []
        self._seen: set[tuple[str, str, str]] = set()
        self._by_head: dict[str, list[Triple]] = {}
        self._by_tail: dict[str, list[Triple]] = {}
        self._display: dict[str, str] = {}
        for t in triples:
            self._add(t)

    def _add(self, triple: Triple) -> None:
        key = triple.key()
        if key in self._seen:
            return
        self._seen.add(key)
        self.triples.append(triple)
        self._by_head.setdefault(key[0], []).append(triple)
        self._by_tail.setdefault(key[2], []).append(triple)
        self._display.setdefault(key[0], triple.head)
        self._display.setdefault(key[2], triple.tail)

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, entity: str) -> bool:
        n = _norm(entity)
        return n in self._by_head or n in self._by_tail

    def display_name(self, entity: str) -> str:
        return self._display.get(_norm(entity), entity)

    def entity_names(self) -> list[str]:
        return sorted(self._display.values(), key=_norm)

    def head_entities(self) -> list[str]:
        return sorted({self._display[h] for h in self._by_head}, key=_norm)

    def neighborhood(self, entity: str, include_inbound: bool = True) -> list[Edge]:
        """All directly connected edges: outbound first, then inbound, each
        sorted by (relation, neighbor). Unknown entities yield an empty list."""
        n = _norm(entity)
        out = [Edge("out", t.relation, t.tail) for t in self._by_head.get(n, ())]
        out.sort(key=lambda e: (_norm(e.relation), _norm(e.neighbor)))
        if include_inbound:
            inc = [Edge("in", t.relation, t.head) for t in self._by_tail.get(n, ())]
            inc.sort(key=lambda e: (_norm(e.relation), _norm(e.neighbor)))
            out.extend(inc)
        return out

    def dump(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for t in self.triples:
                fh.write(f"{t.head}\t{t.relation}\t{t.tail}\n")


def linearize(entries: list[Edge], anchor: str) -> list[str]:
    """Render edges as knowledge strings: out -> "anchor relation neighbor",
    in -> "neighbor relation anchor". Order preserved."""
    lines = []
    for e in entries:
        if e.direction == "out":
            lines.append(f"{anchor} {e.relation} {e.neighbor}")
        else:
            lines.append(f"{e.neighbor} {e.relation} {anchor}")
    return lines


def _local_name(iri: str) -> str:
    name = re.split(r"[/#]", iri)[-1]
    return name.replace("_", " ")


def load_triples(path: str | Path, fmt: str = "tsv") -> TripleStore:
    """Load a TSV (head<TAB>relation<TAB>tail) or N-Triples-subset file.

    Duplicate triples (case-insensitively) are dropped. Malformed rows raise
    with the offending line number.
    """
    if fmt not in ("tsv", "ntriples"):
        raise ValueError(f"unknown triple format {fmt!r}")
    store = TripleStore()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if fmt == "tsv":
                fields = line.split("\t")
                if len(fields) != 3:
                    raise ValueError(
                        f"{path}:{lineno}: expected 3 tab-separated fields, "
                        f"got {len(fields)}")
                head, rel, tail = (f.strip() for f in fields)
            else:
                m = _NT_ROW.match(line)
                if not m:
                    raise ValueError(f"{path}:{lineno}: not a valid triple row")
                head = _local_name(m.group(1))
                rel = _local_name(m.group(2))
                tail = _local_name(m.group(3)) if m.group(3) is not None else m.group(4)
            try:
                store._add(Triple(head, rel, tail))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if len(store) == 0:
        log.warning("loaded an empty triple store from %s", path)
    else:
        log.info("loaded %d triples from %s", len(store), path)
    return store


class EntityIndex:
    """Token-sequence index over every entity name (heads and tails)."""

    def __init__(self, store: TripleStore):
        self._store = store
        self._by_tokens: dict[tuple[str, ...], str] = {}
        self.max_len = 0
        for name in store.entity_names():
            toks = tuple(tokenize(name))
            if toks:
                self._by_tokens[toks] = name
                self.max_len = max(self.max_len, len(toks))

    def match_length(self, tokens: list[str], start: int) -> int:
        """Longest entity match beginning at start; 0 when none."""
        limit = min(self.max_len, len(tokens) - start)
        for span in range(limit, 0, -1):
            if tuple(tokens[start:start + span]) in self._by_tokens:
                return span
        return 0

    def lookup(self, tokens: list[str]) -> str | None:
        """Exact match of a full token sequence against entity names."""
        return self._by_tokens.get(tuple(tokens))
