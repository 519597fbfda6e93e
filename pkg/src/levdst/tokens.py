"""Reserved segment tokens of the flat span grammar.

Everything the codec treats as markup lives here so that schema loading can
refuse domain or slot names that would collide with the grammar.
"""

from __future__ import annotations

import re

SOB = "<SOB>"
EOB = "<EOB>"
EOU = "<EOU>"
EOR = "<EOR>"
NULL_TOKEN = "NULL"

SEGMENT_TOKENS = frozenset({SOB, EOB, EOU, EOR, NULL_TOKEN})

_KB_TOKEN_RE = re.compile(r"^<KB\d+>$")
_DOMAIN_TOKEN_RE = re.compile(r"^\[.*\]$")


def kb_token(index: int) -> str:
    """Surface form of a knowledge-base state, e.g. kb_token(2) == '<KB2>'."""
    return f"<KB{index}>"


def domain_token(domain: str) -> str:
    """Surface form that opens a domain block, e.g. '[hotel]'."""
    return f"[{domain}]"


def is_domain_token(token: str) -> bool:
    return len(token) > 2 and token[0] == "[" and token[-1] == "]"


def is_reserved_name(name: str) -> bool:
    """True when a name would be parsed as markup instead of a plain token."""
    return (
        name in SEGMENT_TOKENS
        or _KB_TOKEN_RE.match(name) is not None
        or _DOMAIN_TOKEN_RE.match(name) is not None
    )
