"""Grammar file loader.

Format, one declaration per line:

    NT -> sym sym | sym        production with ordered alternatives
    %start <class> <NT>        entry point for an utterance class
    %slot <NT> <name>          digest emits this constituent as a slot
    %bracket <NT>              digest groups this constituent's slots
    %role <name>               extra edge label for knowledge files
    # comment

Uppercase symbols are nonterminals, lowercase symbols are words the
user may type. Alternative order is significant: the parser commits to
the first alternative that yields a full parse.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Production:
    lhs: str
    rhs: tuple[str, ...]
    index: int  # global declaration order, used for tie-breaking


@dataclass
class Grammar:
    productions: dict[str, list[Production]] = field(default_factory=dict)
    starts: dict[str, str] = field(default_factory=dict)  # class -> NT
    slots: dict[str, str] = field(default_factory=dict)  # NT -> slot name
    brackets: set[str] = field(default_factory=set)
    extra_roles: set[str] = field(default_factory=set)
    nonterminals: set[str] = field(default_factory=set)
    terminals: set[str] = field(default_factory=set)

    def alternatives(self, nt: str) -> list[Production]:
        return self.productions.get(nt, [])

    @classmethod
    def load(cls, text: str) -> "Grammar":
        g = cls()
        index = 0
        pending: list[tuple[int, str, str]] = []  # (lineno, kind, payload)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("%"):
                parts = line.split()
                if parts[0] == "%start" and len(parts) == 3:
                    pending.append((lineno, "start", f"{parts[1]} {parts[2]}"))
                elif parts[0] == "%slot" and len(parts) == 3:
                    pending.append((lineno, "slot", f"{parts[1]} {parts[2]}"))
                elif parts[0] == "%bracket" and len(parts) == 2:
                    pending.append((lineno, "bracket", parts[1]))
                elif parts[0] == "%role" and len(parts) == 2:
                    pending.append((lineno, "role", parts[1]))
                else:
                    raise GrammarError(f"line {lineno}: bad directive {line!r}")
                continue
            if "->" not in line:
                raise GrammarError(f"line {lineno}: expected a production, got {line!r}")
            lhs, rhs_text = (s.strip() for s in line.split("->", 1))
            if not lhs or not lhs.isupper() or " " in lhs:
                raise GrammarError(f"line {lineno}: bad nonterminal {lhs!r}")
            for alt in rhs_text.split("|"):
                symbols = tuple(alt.split())
                if not symbols:
                    raise GrammarError(f"line {lineno}: empty alternative for {lhs}")
                g.productions.setdefault(lhs, []).append(Production(lhs, symbols, index))
                index += 1

        g.nonterminals = set(g.productions)
        referenced: set[str] = set()
        for alts in g.productions.values():
            for prod in alts:
                referenced.update(prod.rhs)
        for sym in sorted(referenced - g.nonterminals):
            if any(ch.isupper() for ch in sym):
                raise GrammarError(f"nonterminal {sym!r} has no productions")
            g.terminals.add(sym)

        for lineno, kind, payload in pending:
            if kind == "start":
                klass, nt = payload.split()
                if nt not in g.nonterminals:
                    raise GrammarError(f"line {lineno}: unknown start symbol {nt!r}")
                if klass in g.starts:
                    raise GrammarError(f"line {lineno}: duplicate start class {klass!r}")
                g.starts[klass] = nt
            elif kind == "slot":
                nt, name = payload.split()
                if nt not in g.nonterminals:
                    raise GrammarError(f"line {lineno}: unknown slot symbol {nt!r}")
                g.slots[nt] = name
            elif kind == "bracket":
                if payload not in g.nonterminals:
                    raise GrammarError(f"line {lineno}: unknown bracket symbol {payload!r}")
                g.brackets.add(payload)
            else:
                g.extra_roles.add(payload)
        if not g.starts:
            raise GrammarError("grammar declares no %start classes")
        return g
