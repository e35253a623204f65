"""Chart parser with a deterministic derivation extractor.

Recognition is standard Earley over the loaded grammar (no epsilon
productions, so no nullable bookkeeping). Ambiguity is resolved after
the fact while extracting a single derivation: alternatives are tried
in grammar declaration order, and within an alternative each symbol
takes the shortest span that lets the rest of the production finish.
The same sentence therefore always yields the same tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grammar import Grammar, GrammarError, Production


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(message)
        self.pos = pos  # token index the parse could not get past


@dataclass
class Tree:
    symbol: str
    start: int
    end: int
    children: list["Tree"] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


def parse(tokens: list[str], grammar: Grammar, klass: str) -> Tree:
    """Parse a full token list as the given utterance class."""
    if klass not in grammar.starts:
        raise GrammarError(f"unknown utterance class {klass!r}")
    start = grammar.starts[klass]
    n = len(tokens)
    if n == 0:
        raise ParseError("empty utterance", 0)

    # --- recognition ----------------------------------------------------
    # state: (production, dot, origin)
    chart: list[list[tuple[Production, int, int]]] = [[] for _ in range(n + 1)]
    seen: list[set[tuple[int, int, int]]] = [set() for _ in range(n + 1)]
    # completed constituent spans, and which alternatives built them
    completed: dict[tuple[str, int], list[int]] = {}
    completed_alts: set[tuple[int, int, int]] = set()  # (prod.index, i, j)

    def add(k: int, prod: Production, dot: int, origin: int) -> None:
        key = (prod.index, dot, origin)
        if key not in seen[k]:
            seen[k].add(key)
            chart[k].append((prod, dot, origin))

    for prod in grammar.alternatives(start):
        add(0, prod, 0, 0)

    reach = 0
    for k in range(n + 1):
        if chart[k]:
            reach = k
        i = 0
        while i < len(chart[k]):
            prod, dot, origin = chart[k][i]
            i += 1
            if dot < len(prod.rhs):
                sym = prod.rhs[dot]
                if sym in grammar.nonterminals:
                    for alt in grammar.alternatives(sym):
                        add(k, alt, 0, k)
                elif k < n and tokens[k] == sym:
                    add(k + 1, prod, dot + 1, origin)
            else:
                if (prod.index, origin, k) not in completed_alts:
                    completed_alts.add((prod.index, origin, k))
                    spans = completed.setdefault((prod.lhs, origin), [])
                    if k not in spans:
                        spans.append(k)
                for p2, d2, o2 in list(chart[origin]):
                    if d2 < len(p2.rhs) and p2.rhs[d2] == prod.lhs:
                        add(k, p2, d2 + 1, o2)

    if not any(p.lhs == start and o == 0 for (p, d, o) in chart[n] if d == len(p.rhs)):
        if reach >= n:
            raise ParseError(f"incomplete {klass} utterance", n)
        raise ParseError(
            f"cannot continue {klass} utterance at {tokens[reach]!r}", reach
        )

    for spans in completed.values():
        spans.sort()

    # --- extraction -----------------------------------------------------
    derive_memo: dict[tuple[str, int, int], Tree | None] = {}
    split_fail: set[tuple[int, int, int, int]] = set()

    def derive(sym: str, i: int, j: int) -> Tree | None:
        if sym not in grammar.nonterminals:
            if j == i + 1 and tokens[i] == sym:
                return Tree(sym, i, j)
            return None
        key = (sym, i, j)
        if key in derive_memo:
            return derive_memo[key]
        result: Tree | None = None
        for prod in grammar.alternatives(sym):
            if (prod.index, i, j) not in completed_alts:
                continue
            children = split(prod, 0, i, j)
            if children is not None:
                result = Tree(sym, i, j, children)
                break
        derive_memo[key] = result
        return result

    def split(prod: Production, idx: int, a: int, j: int) -> list[Tree] | None:
        if (prod.index, idx, a, j) in split_fail:
            return None
        rhs = prod.rhs
        if idx == len(rhs) - 1:
            child = derive(rhs[idx], a, j)
            if child is not None:
                return [child]
            split_fail.add((prod.index, idx, a, j))
            return None
        sym = rhs[idx]
        remaining = len(rhs) - idx - 1
        if sym in grammar.nonterminals:
            ends = [b for b in completed.get((sym, a), []) if a < b <= j - remaining]
        else:
            ends = [a + 1] if a < len(tokens) and tokens[a] == sym and a + 1 <= j - remaining else []
        for b in ends:  # ascending: shortest span first
            child = derive(sym, a, b)
            if child is None:
                continue
            rest = split(prod, idx + 1, b, j)
            if rest is not None:
                return [child] + rest
        split_fail.add((prod.index, idx, a, j))
        return None

    tree = derive(start, 0, n)
    if tree is None:  # recognized but not derivable: should not happen
        raise ParseError(f"no derivation for {klass} utterance", n)
    return tree
