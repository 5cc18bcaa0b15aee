"""Lexical scanner turning a flagged code block into embedding-ready tokens.

Identifiers are kept whole and case-sensitive (``executeQuery`` and
``getParameter`` are the signal we care about). Numeric, string and char
literals collapse to the placeholder tokens ``<NUM>`` / ``<STR>`` so the
vocabulary stays bounded. The scanner never raises: every byte sequence
tokenizes to something.
"""

import string

NUM_TOKEN = "<NUM>"
STR_TOKEN = "<STR>"

# Two-character operators matched greedily; everything else that is not an
# identifier or literal becomes a single-character token.
TWO_CHAR_OPERATORS = ("==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "->")

_IDENT_START = frozenset(string.ascii_letters + "_$")
_IDENT_CONT = frozenset(string.ascii_letters + string.digits + "_$")
_DIGITS = frozenset(string.digits)
_NUM_CONT = frozenset(string.ascii_letters + string.digits + "._")


def tokenize(code_block: str) -> list[str]:
    """Return the token sequence for ``code_block``."""
    return [tok for tok, _, _ in tokenize_with_spans(code_block)]


def tokenize_with_spans(code_block: str) -> list[tuple[str, int, int]]:
    """Instrumented scan: returns ``(token, start, end)`` with [start, end)
    giving the consumed source span.

    The spans back the coverage check: they are disjoint, ascending, and
    account for every non-whitespace character of the input.
    """
    text = code_block
    n = len(text)
    out: list[tuple[str, int, int]] = []
    i = 0
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        # Placeholders are fixed points: re-tokenizing tokenizer output must
        # reproduce it, so <NUM>/<STR> are recognized before '<' is treated
        # as an operator.
        if text.startswith(NUM_TOKEN, i):
            out.append((NUM_TOKEN, i, i + len(NUM_TOKEN)))
            i += len(NUM_TOKEN)
            continue
        if text.startswith(STR_TOKEN, i):
            out.append((STR_TOKEN, i, i + len(STR_TOKEN)))
            i += len(STR_TOKEN)
            continue
        if c in _IDENT_START:
            j = i + 1
            while j < n and text[j] in _IDENT_CONT:
                j += 1
            out.append((text[i:j], i, j))
            i = j
            continue
        if c in _DIGITS:
            j = _scan_number(text, i)
            out.append((NUM_TOKEN, i, j))
            i = j
            continue
        if c == '"' or c == "'":
            j = _scan_literal(text, i, c)
            out.append((STR_TOKEN, i, j))
            i = j
            continue
        pair = text[i : i + 2]
        if pair in TWO_CHAR_OPERATORS:
            out.append((pair, i, i + 2))
            i += 2
            continue
        out.append((c, i, i + 1))
        i += 1
    return out


def _scan_number(text: str, i: int) -> int:
    # Consumes Java-style literals whole: 0x1F, 3.14f, 1_000, 1e-5, 42L.
    n = len(text)
    j = i + 1
    while j < n:
        c = text[j]
        if c in _NUM_CONT:
            j += 1
        elif c in "+-" and text[j - 1] in "eEpP":
            j += 1
        else:
            break
    return j


def _scan_literal(text: str, i: int, quote: str) -> int:
    # An unterminated literal consumes the remainder of the input.
    n = len(text)
    j = i + 1
    while j < n:
        c = text[j]
        if c == "\\":
            j += 2
        elif c == quote:
            return j + 1
        else:
            j += 1
    return n
