# operators/event_dsl.py
"""
Event DSL - fk-separation

S-expression syntax for events in experiment specs.

Grammar:
    event    := "(" head arg* ")"
    site     := int{d}                 d coordinates, inline
    bond     := int{2d}                both endpoints, inline
    bondlist := "(" int{2d} ")"*       one parenthesised bond per entry

    (true) | (false)
    (open BOND) | (closed BOND)
    (connect SITE SITE)
    (connect-dual DUALSITE DUALSITE)   d = 2, (i, j) is the dual site (i+1/2, j+1/2)
    (reaches SITE R)                   cluster of the site reaches distance R
    (all-open BONDLIST)
    (threshold K BONDLIST)
    (not EVENT) | (and EVENT EVENT+) | (or EVENT EVENT+)
    (sep r R EVENT EVENT)              occurrence at separation R
    (disjoint EVENT EVENT)

Example:
    (sep r 3 (connect 0 0 2 2) (open 4 1 4 2))

Errors are SpecError with 1-based line and column of the offending token.
"""

import logging
import re
from dataclasses import dataclass
from typing import Union

from operators.errors import SpecError
from operators.events import (
    Event,
    all_open,
    always_false,
    always_true,
    and_,
    closed_bond,
    cluster_reaches,
    complement,
    connect,
    connect_dual,
    disjoint,
    open_bond,
    or_,
    sep,
    threshold,
)

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([-+]?\d+(?:\.\d+)?)|([A-Za-z][A-Za-z0-9_\-*]*)|(;[^\n]*))")


@dataclass(frozen=True)
class Token:
    kind: str  # "(", ")", "num", "sym"
    text: str
    line: int
    column: int


@dataclass
class Node:
    items: list
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        ch = text[pos]
        if ch == "\n":
            line += 1
            pos += 1
            line_start = pos
            continue
        if ch.isspace():
            pos += 1
            continue
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise SpecError(f"Unexpected character {ch!r}", line, pos - line_start + 1)
        column = match.start(match.lastindex) - line_start + 1
        open_, close, num, sym, comment = match.groups()
        if open_:
            tokens.append(Token("(", "(", line, column))
        elif close:
            tokens.append(Token(")", ")", line, column))
        elif num:
            tokens.append(Token("num", num, line, column))
        elif sym:
            tokens.append(Token("sym", sym, line, column))
        pos = match.end()
    return tokens


def _read(tokens: list[Token], i: int) -> tuple[Union[Node, Token], int]:
    tok = tokens[i]
    if tok.kind == ")":
        raise SpecError("Unexpected ')'", tok.line, tok.column)
    if tok.kind != "(":
        return tok, i + 1
    items = []
    i += 1
    while True:
        if i >= len(tokens):
            raise SpecError("Unclosed '('", tok.line, tok.column)
        if tokens[i].kind == ")":
            return Node(items, tok.line, tok.column), i + 1
        item, i = _read(tokens, i)
        items.append(item)


def read(text: str) -> Node:
    tokens = tokenize(text)
    if not tokens:
        raise SpecError("Empty event expression", 1, 1)
    node, end = _read(tokens, 0)
    if end != len(tokens):
        extra = tokens[end]
        raise SpecError("Trailing input after the event", extra.line, extra.column)
    if not isinstance(node, Node):
        raise SpecError("An event must be a parenthesised form", node.line, node.column)
    return node


class _Builder:
    def __init__(self, dimension: int):
        self.d = dimension

    def ints(self, items: list, count: int, where: Node) -> list[int]:
        if len(items) < count:
            raise SpecError(f"Expected {count} integers, got {len(items)}", where.line, where.column)
        out = []
        for tok in items[:count]:
            if not isinstance(tok, Token) or tok.kind != "num" or "." in tok.text:
                raise SpecError("Expected an integer coordinate", tok.line, tok.column)
            out.append(int(tok.text))
        return out

    def number(self, tok, where: Node) -> float:
        if not isinstance(tok, Token) or tok.kind != "num":
            raise SpecError("Expected a number", getattr(tok, "line", where.line), getattr(tok, "column", where.column))
        value = float(tok.text)
        return int(value) if value.is_integer() else value

    def bond(self, items: list, where: Node):
        c = self.ints(items, 2 * self.d, where)
        return tuple(c[: self.d]), tuple(c[self.d:])

    def bond_list(self, items: list, where: Node) -> list:
        out = []
        for item in items:
            if not isinstance(item, Node):
                raise SpecError("Expected a parenthesised bond", item.line, item.column)
            if len(item.items) != 2 * self.d:
                raise SpecError(f"A bond takes {2 * self.d} integers", item.line, item.column)
            out.append(self.bond(item.items, item))
        return out

    def arity(self, node: Node, args: list, count: int, head: str) -> None:
        if len(args) != count:
            raise SpecError(f"'{head}' takes {count} arguments, got {len(args)}", node.line, node.column)

    def build(self, node) -> Event:
        if not isinstance(node, Node):
            raise SpecError("Expected an event form", node.line, node.column)
        if not node.items or not isinstance(node.items[0], Token) or node.items[0].kind != "sym":
            raise SpecError("An event form starts with its operator name", node.line, node.column)
        head = node.items[0].text.lower()
        args = node.items[1:]
        try:
            return self._dispatch(node, head, args)
        except SpecError:
            raise
        except ValueError as e:
            raise SpecError(str(e), node.line, node.column) from e

    def _dispatch(self, node: Node, head: str, args: list) -> Event:
        d = self.d
        if head == "true":
            self.arity(node, args, 0, head)
            return always_true()
        if head == "false":
            self.arity(node, args, 0, head)
            return always_false()
        if head in ("open", "closed"):
            self.arity(node, args, 2 * d, head)
            x, y = self.bond(args, node)
            return open_bond((x, y)) if head == "open" else closed_bond((x, y))
        if head == "connect":
            self.arity(node, args, 2 * d, head)
            c = self.ints(args, 2 * d, node)
            return connect(c[:d], c[d:])
        if head == "connect-dual":
            self.arity(node, args, 4, head)
            c = self.ints(args, 4, node)
            return connect_dual(c[:2], c[2:])
        if head == "reaches":
            self.arity(node, args, d + 1, head)
            c = self.ints(args, d, node)
            return cluster_reaches(c, self.number(args[d], node))
        if head == "all-open":
            return all_open(self.bond_list(args, node))
        if head == "threshold":
            if not args:
                raise SpecError("'threshold' needs K and a bond list", node.line, node.column)
            k = self.ints(args[:1], 1, node)[0]
            return threshold(self.bond_list(args[1:], node), k)
        if head == "not":
            self.arity(node, args, 1, head)
            return complement(self.build(args[0]))
        if head in ("and", "or"):
            if len(args) < 2:
                raise SpecError(f"'{head}' takes at least 2 events", node.line, node.column)
            events = [self.build(a) for a in args]
            combine = and_ if head == "and" else or_
            out = events[0]
            for e in events[1:]:
                out = combine(out, e)
            return out
        if head == "sep":
            self.arity(node, args, 4, head)
            key = args[0]
            if not isinstance(key, Token) or key.kind != "sym" or key.text != "r":
                raise SpecError("Expected 'r' after 'sep'", getattr(key, "line", node.line), getattr(key, "column", node.column))
            return sep(self.build(args[2]), self.build(args[3]), self.number(args[1], node))
        if head == "disjoint":
            self.arity(node, args, 2, head)
            return disjoint(self.build(args[0]), self.build(args[1]))
        head_tok = node.items[0]
        raise SpecError(f"Unknown event operator '{head}'", head_tok.line, head_tok.column)


def parse_event(text: str, dimension: int = 2) -> Event:
    """Parse one DSL string into an Event."""
    if dimension not in (1, 2, 3):
        raise ValueError(f"Unsupported dimension {dimension}")
    event = _Builder(dimension).build(read(text))
    logger.debug(f"[CHECK] parsed {text!r} -> {event.name}")
    return event
