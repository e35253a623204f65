"""Tokenizer and parse-tree digest.

The digest flattens a parse tree into an ordered association list:
slot items carry the words of slot-marked constituents, and bracket
items delimit clause groups. Compilers consume this list instead of
the raw tree, so the grammar can be reshaped without touching them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grammar import Grammar
from .parser import Tree

_EDGE_PUNCT = ".,!?;:\"()[]"


@dataclass(frozen=True)
class Token:
    surface: str  # original casing, for quoted speech
    lower: str


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, trimming edge punctuation from each word."""
    tokens = []
    for raw in text.split():
        word = raw.strip(_EDGE_PUNCT)
        if word:
            tokens.append(Token(word, word.lower()))
    return tokens


@dataclass
class AList:
    klass: str
    # items: ("slot", name, value) or ("open", "", "") or ("close", "", "")
    items: list[tuple[str, str, str]] = field(default_factory=list)

    def slots(self, name: str) -> list[str]:
        return [v for kind, n, v in self.items if kind == "slot" and n == name]

    def first(self, name: str) -> str | None:
        vals = self.slots(name)
        return vals[0] if vals else None

    def groups(self) -> list[list[tuple[str, str]]]:
        """Slot pairs of each bracketed clause, in order."""
        out: list[list[tuple[str, str]]] = []
        current: list[tuple[str, str]] | None = None
        for kind, name, value in self.items:
            if kind == "open":
                current = []
            elif kind == "close":
                out.append(current or [])
                current = None
            elif current is not None:
                current.append((name, value))
        return out

    def toplevel(self, name: str) -> list[str]:
        """Values of a slot appearing outside every bracket."""
        out = []
        depth = 0
        for kind, n, v in self.items:
            if kind == "open":
                depth += 1
            elif kind == "close":
                depth -= 1
            elif n == name and depth == 0:
                out.append(v)
        return out


def digest(tree: Tree, grammar: Grammar, tokens: list[Token], klass: str) -> AList:
    items: list[tuple[str, str, str]] = []

    def walk(node: Tree) -> None:
        name = grammar.slots.get(node.symbol)
        if name is not None:
            words = tokens[node.start : node.end]
            if name == "str":
                value = " ".join(t.surface for t in words)
            else:
                value = " ".join(t.lower for t in words)
            items.append(("slot", name, value))
            return
        if node.symbol in grammar.brackets:
            items.append(("open", "", ""))
            for child in node.children:
                walk(child)
            items.append(("close", "", ""))
            return
        for child in node.children:
            walk(child)

    walk(tree)
    return AList(klass, items)
