"""Rule-based word tokenizer: lowercase, whitespace split, punctuation standalone.

Hyphens and apostrophes stay inside tokens ("mid-ocean" is one token), as do
underscores, so relation names like "formed_by" survive as single tokens.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"\w(?:[\w'-]*\w)?|[^\w\s]")

PUNCTUATION = frozenset(".,;:!?\"'()[]{}<>-")

# Small embedded English stopword list shared by extraction and metrics.
STOPWORDS = frozenset("""
a an the is are was were be been being am do does did done have has had
i you he she it we they me him her us them my your his its our their
this that these those what which who whom whose where when why how
and or but not no nor of in on at to for with about as by from into
so if then there here can could will would shall should may might must
tell me please hello hi hey thanks thank very really just also too
""".split())


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def detokenize(tokens: list[str]) -> str:
    return " ".join(tokens)
