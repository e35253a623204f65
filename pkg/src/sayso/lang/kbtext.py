"""Text format for saved operators and rules.

A knowledge file is a sequence of blocks:

    op {
      name: never-grab
      pref: 1.0
      trig: ANTE[
        act-1 -lex- grab
        act-1 -obj-> obj-2
        ako-3 -lex- person
        ako-3 -ako-> obj-2
      ]
      body:
        DO[
          act-4 -lex- say
          act-4 -obj-> txt-5
          txt-5 -str- I'm not allowed to
        ]
        PUNT[ ]
    }

    rule {
      name: girl-person
      conf: 1.0
      if:
        ako-1 -lex- girl
        ako-1 -ako-> obj-2
      then:
        ako-3 -lex- person
        ako-3 -ako-> obj-2
    }

Inside a bracket section each line declares or extends one node:
`key`, `key -lex- word`, `key -str- text...` (rest of line),
`key -blf- 0.6`, `key -unify-`, or `key -role-> key2`. The first key
mentioned in a trigger (or `if:`) section is the pattern head. In a
body, an unprefixed directive starts a new play, `&` joins the current
play as a parallel requirement, and `~` rides along as an auxiliary.
Keys first seen in an earlier section are references, not new nodes.
Full-line `#` comments only. save/load round-trips bit-exactly.
"""

from __future__ import annotations

import re

from ..policy import Chain, DirectiveKind, DirectiveTemplate, Operator, Play
from ..rules import Rule
from ..semnet import Pattern, PatternEdge, PatternNode


class KBError(ValueError):
    pass


_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*-\d+$")
_EDGE_RE = re.compile(r"^(\S+) -([a-z][a-z0-9_]*)-> (\S+)$")


# ---------------------------------------------------------------------------
# printing


def _node_lines(pn: PatternNode, declared: set[str]) -> list[str]:
    """Lines describing one node; a bare key if already declared earlier."""
    if pn.key in declared:
        return [pn.key]
    lines = []
    if pn.lex is not None:
        lines.append(f"{pn.key} -lex- {pn.lex}")
    if pn.text is not None:
        lines.append(f"{pn.key} -str- {pn.text}")
    if pn.lex is None and pn.text is None:
        lines.append(pn.key)
    if pn.belief_min is not None:
        lines.append(f"{pn.key} -blf- {pn.belief_min!r}")
    if pn.unify:
        lines.append(f"{pn.key} -unify-")
    return lines


def _head_first(nodes: list[PatternNode], head: str | None) -> list[PatternNode]:
    """Canonical order: the head node leads, the rest keep their order."""
    if head is None:
        return list(nodes)
    lead = [pn for pn in nodes if pn.key == head]
    return lead + [pn for pn in nodes if pn.key != head]


def _section_lines(
    nodes: list[PatternNode], edges: list[PatternEdge], declared: set[str]
) -> list[str]:
    lines: list[str] = []
    for pn in nodes:
        lines.extend(_node_lines(pn, declared))
        declared.add(pn.key)
    for e in edges:
        lines.append(f"{e.src} -{e.role}-> {e.dst}")
    return lines


def _directive_lines(
    d: DirectiveTemplate, chain: Chain, used_edges: set[int], declared: set[str]
) -> list[str]:
    keyset = set(d.keys)
    nodes = _head_first([chain.graph.node(k) for k in d.keys], d.head)
    edges = []
    for i, e in enumerate(chain.graph.edges):
        if i not in used_edges and e.src in keyset and e.dst in keyset:
            used_edges.add(i)
            edges.append(e)
    inner = _section_lines(nodes, edges, declared)
    if not inner:
        return [f"{d.kind.value}[ ]"]
    return [f"{d.kind.value}["] + [f"  {ln}" for ln in inner] + ["]"]


def _body_lines(chain: Chain, declared: set[str]) -> list[str]:
    lines: list[str] = []
    used_edges: set[int] = set()
    for play in chain.plays:
        for di, d in enumerate(play.required):
            prefix = "& " if di > 0 else ""
            block = _directive_lines(d, chain, used_edges, declared)
            lines.append(f"    {prefix}{block[0]}")
            lines.extend(f"    {ln}" for ln in block[1:])
        for d in play.auxiliary:
            block = _directive_lines(d, chain, used_edges, declared)
            lines.append(f"    ~ {block[0]}")
            lines.extend(f"    {ln}" for ln in block[1:])
    leftover = [e for i, e in enumerate(chain.graph.edges) if i not in used_edges]
    if leftover:
        raise KBError(f"body edges not covered by any directive: {leftover}")
    return lines


def save_operator(op: Operator) -> str:
    lines = ["op {"]
    if op.name:
        lines.append(f"  name: {op.name}")
    lines.append(f"  pref: {op.pref!r}")
    declared: set[str] = set()
    trig_nodes = _head_first(op.trigger.nodes, op.trigger.head)
    lines.append(f"  trig: {op.trigger_kind.value}[")
    lines.extend(f"    {ln}" for ln in _section_lines(trig_nodes, op.trigger.edges, declared))
    lines.append("  ]")
    lines.append("  body:")
    lines.extend(_body_lines(op.body, declared))
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_rule(rule: Rule) -> str:
    lines = ["rule {"]
    if rule.name:
        lines.append(f"  name: {rule.name}")
    lines.append(f"  conf: {rule.conf!r}")
    declared: set[str] = set()
    if_nodes = _head_first(rule.if_pattern.nodes, rule.if_pattern.head)
    lines.append("  if:")
    lines.extend(f"    {ln}" for ln in _section_lines(if_nodes, rule.if_pattern.edges, declared))
    lines.append("  then:")
    lines.extend(f"    {ln}" for ln in _section_lines(rule.then_template.nodes, rule.then_template.edges, declared))
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_kb(ops: list[Operator], rules: list[Rule]) -> str:
    parts = [save_operator(op) for op in ops] + [save_rule(r) for r in rules]
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# loading


class _Section:
    """Collects nodes/edges of one bracket section, reusing earlier keys."""

    def __init__(self, known: dict[str, PatternNode]):
        self.known = known  # keys declared in earlier sections of the block
        self.nodes: list[PatternNode] = []
        self.edges: list[PatternEdge] = []
        self.order: list[str] = []  # first-mention order within this section

    def mention(self, key: str) -> PatternNode:
        if not _KEY_RE.match(key):
            raise KBError(f"bad node key {key!r}")
        if key in self.order:
            for pn in self.nodes:
                if pn.key == key:
                    return pn
        self.order.append(key)
        if key in self.known:
            pn = PatternNode(key=key, is_new=False, hint=key.rsplit("-", 1)[0])
        else:
            pn = PatternNode(key=key, is_new=True, hint=key.rsplit("-", 1)[0])
        self.nodes.append(pn)
        return pn

    def feed(self, line: str) -> None:
        edge = _EDGE_RE.match(line)
        if edge and edge.group(2) not in ("lex", "str", "blf", "unify"):
            src, role, dst = edge.groups()
            self.mention(src)
            self.mention(dst)
            self.edges.append(PatternEdge(src, role, dst))
            return
        # -str- consumes the rest of the line, so test it before -lex-
        if " -str- " in line:
            key, text = line.split(" -str- ", 1)
            pn = self.mention(key.strip())
            if pn.is_new:
                pn.text = text
            return
        if " -lex- " in line:
            key, word = line.split(" -lex- ", 1)
            pn = self.mention(key.strip())
            if pn.is_new:
                pn.lex = word.strip()
            return
        if " -blf- " in line:
            key, value = line.split(" -blf- ", 1)
            pn = self.mention(key.strip())
            pn.belief_min = float(value)
            return
        if line.endswith(" -unify-"):
            pn = self.mention(line[: -len(" -unify-")].strip())
            pn.unify = True
            return
        self.mention(line.strip())

    def close(self) -> None:
        for pn in self.nodes:
            self.known[pn.key] = pn


def _parse_block(lines: list[str], lineno: int) -> tuple[str, dict]:
    """One `op {...}` / `rule {...}` block -> (kind, fields)."""
    header = lines[0].split("{", 1)[0].strip()
    if header not in ("op", "rule"):
        raise KBError(f"line {lineno}: unknown block kind {header!r}")
    fields: dict = {"name": "", "sections": [], "body": None}
    known: dict[str, PatternNode] = {}
    i = 1
    n = len(lines)

    def section_until_bracket(start: int) -> tuple[_Section, int]:
        sec = _Section(known)
        j = start
        while j < n:
            ln = lines[j].strip()
            j += 1
            if ln == "]":
                sec.close()
                return sec, j
            if ln:
                sec.feed(ln)
        raise KBError(f"line {lineno + start}: unterminated section")

    while i < n:
        line = lines[i].strip()
        if not line or line == "}":
            i += 1
            continue
        if line.startswith("name:"):
            fields["name"] = line.split(":", 1)[1].strip()
            i += 1
        elif line.startswith("pref:") or line.startswith("conf:"):
            fields["weight"] = float(line.split(":", 1)[1])
            i += 1
        elif line.startswith("trig:"):
            rest = line.split(":", 1)[1].strip()
            if not rest.endswith("["):
                raise KBError(f"line {lineno + i}: expected KIND[ after trig:")
            fields["trigger_kind"] = DirectiveKind[rest[:-1].strip()]
            sec, i = section_until_bracket(i + 1)
            fields["sections"].append(("trig", sec))
        elif line.startswith("if:"):
            sec, nxt = _inline_section(lines, i, "then:", known)
            fields["sections"].append(("if", sec))
            i = nxt
        elif line.startswith("then:"):
            sec, nxt = _inline_section(lines, i, None, known)
            fields["sections"].append(("then", sec))
            i = nxt
        elif line.startswith("body:"):
            fields["body"], i = _parse_body(lines, i + 1, known, lineno)
        else:
            raise KBError(f"line {lineno + i}: unexpected {line!r}")
    return header, fields


def _inline_section(
    lines: list[str], start: int, stop_prefix: str | None, known: dict[str, PatternNode]
) -> tuple[_Section, int]:
    """`if:` / `then:` sections run to the stop marker or block end."""
    sec = _Section(known)
    i = start + 1
    while i < len(lines):
        ln = lines[i].strip()
        if ln == "}" or (stop_prefix and ln.startswith(stop_prefix)):
            break
        if ln:
            sec.feed(ln)
        i += 1
    sec.close()
    return sec, i


def _parse_body(
    lines: list[str], start: int, known: dict[str, PatternNode], lineno: int
) -> tuple[Chain, int]:
    nodes: list[PatternNode] = []
    edges: list[PatternEdge] = []
    plays: list[Play] = []
    i = start
    n = len(lines)
    while i < n:
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        if line == "}":
            break
        mode = "new"
        if line.startswith("& "):
            mode, line = "parallel", line[2:].strip()
        elif line.startswith("~ "):
            mode, line = "auxiliary", line[2:].strip()
        m = re.match(r"^([A-Z]+)\[(.*)$", line)
        if not m:
            raise KBError(f"line {lineno + i}: expected a directive, got {line!r}")
        kind = DirectiveKind[m.group(1)]
        sec = _Section(known)
        inline_rest = m.group(2).strip()
        i += 1
        if inline_rest.endswith("]"):
            inline_rest = inline_rest[:-1].strip()
            if inline_rest:
                sec.feed(inline_rest)
            sec.close()
        else:
            if inline_rest:
                sec.feed(inline_rest)
            closed = False
            while i < n:
                ln = lines[i].strip()
                i += 1
                if ln == "]":
                    closed = True
                    break
                if ln:
                    sec.feed(ln)
            if not closed:
                raise KBError(f"line {lineno + i}: unterminated directive")
            sec.close()
        for pn in sec.nodes:
            if all(existing.key != pn.key for existing in nodes):
                nodes.append(pn)
        edges.extend(sec.edges)
        head = sec.order[0] if sec.order else None
        d = DirectiveTemplate(kind, head=head, keys=list(sec.order))
        if mode == "new" or not plays:
            plays.append(Play(required=[d]))
        elif mode == "parallel":
            plays[-1].required.append(d)
        else:
            plays[-1].auxiliary.append(d)
    return Chain(Pattern(nodes, edges), plays), i


def load_kb(text: str) -> tuple[list[Operator], list[Rule]]:
    ops: list[Operator] = []
    rules: list[Rule] = []
    lines = text.splitlines()
    i = 0
    n = len(lines)
    while i < n:
        line = lines[i].strip()
        if not line or line.startswith("#"):
            i += 1
            continue
        if not (line.endswith("{") and line.split("{")[0].strip() in ("op", "rule")):
            raise KBError(f"line {i + 1}: expected a block header, got {line!r}")
        start = i
        block = [lines[i]]
        i += 1
        while i < n and lines[i].strip() != "}":
            block.append(lines[i])
            i += 1
        if i == n:
            raise KBError(f"line {start + 1}: unterminated block")
        block.append(lines[i])
        i += 1
        kind, fields = _parse_block(block, start + 1)
        if kind == "op":
            trig_secs = [s for tag, s in fields["sections"] if tag == "trig"]
            if len(trig_secs) != 1 or fields["body"] is None:
                raise KBError(f"line {start + 1}: op needs one trig: and a body:")
            sec = trig_secs[0]
            head = sec.order[0] if sec.order else None
            ops.append(
                Operator(
                    trigger_kind=fields["trigger_kind"],
                    trigger=Pattern(sec.nodes, sec.edges, head),
                    body=fields["body"],
                    pref=fields.get("weight", 1.0),
                    name=fields["name"],
                )
            )
        else:
            tags = [tag for tag, _ in fields["sections"]]
            if tags != ["if", "then"]:
                raise KBError(f"line {start + 1}: rule needs if: then then:")
            if_sec = fields["sections"][0][1]
            then_sec = fields["sections"][1][1]
            rules.append(
                Rule(
                    if_pattern=Pattern(if_sec.nodes, if_sec.edges, if_sec.order[0]),
                    then_template=Pattern(then_sec.nodes, then_sec.edges),
                    conf=fields.get("weight", 1.0),
                    name=fields["name"],
                )
            )
    return ops, rules
