"""Semantic-network memory: nodes, role edges, and three memory levels.

Assertions are small graphs. Nodes stand for objects and predicate
instances; a predicate node points at its arguments through role-labelled
edges (``dir-1 -dir-> act-1`` reads "dir-1 fills the dir role of act-1"...
here the edge is stored on the source node). A node may carry any number
of lexical tags; matching accepts a node if the wanted word is among its
tags, case-insensitively.

Every node lives at one of three levels:

* ``ATTENTION`` - items the interpreter is actively handling (directive
  payload heads). Created active; deactivated when handled; demoted to
  working memory RETAIN ticks later.
* ``WORKING`` - context linked to current or recent attention items.
  Collected once nothing recent anchors it.
* ``HALO`` - speculative conclusions derived by inference rules. Wiped
  and re-derived whenever working memory changes, so it never needs
  truth maintenance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

__all__ = [
    "Level",
    "BUILTIN_ROLES",
    "SemNetError",
    "NetNode",
    "PatternNode",
    "PatternEdge",
    "Pattern",
    "Memory",
    "match_pattern",
    "assert_instance",
]

BUILTIN_ROLES = frozenset(
    {"lex", "hq", "ako", "agt", "dest", "cmd", "obj", "dir", "deg", "arg", "str"}
)

# property predications pointing at a reached object anchor themselves;
# event-participation roles do not (see Memory.tick)
ANCHOR_BACK_ROLES = frozenset({"ako", "hq"})


class Level(Enum):
    ATTENTION = "attention"
    WORKING = "working"
    HALO = "halo"


ALL_LEVELS = frozenset(Level)
CONSCIOUS = frozenset({Level.ATTENTION, Level.WORKING})


class SemNetError(ValueError):
    """Raised for malformed graph operations (bad role, dangling id, ...)."""


@dataclass(slots=True)
class NetNode:
    """One semantic-network node."""

    id: int
    name: str                      # debug handle like "act-3"; no semantics
    lex: set[str]
    belief: float
    level: Level
    active: bool
    created_tick: int
    deactivated_tick: Optional[int] = None
    text: Optional[str] = None     # literal payload reached through a str edge
    out: list[tuple[str, int]] = field(default_factory=list)
    inc: list[tuple[str, int]] = field(default_factory=list)

    def has_tag(self, word: str) -> bool:
        return word.lower() in self.lex


# ---------------------------------------------------------------------------
# patterns


@dataclass
class PatternNode:
    """A variable in a pattern/template graph.

    ``lex`` constrains which memory nodes it may bind; ``is_new`` marks
    template nodes to be created on instantiation; ``unify`` marks object
    nodes that should merge with an existing same-named object when a
    directive payload is materialized.
    """

    key: str
    lex: Optional[str] = None
    belief_min: Optional[float] = None
    is_new: bool = False
    unify: bool = False
    text: Optional[str] = None
    hint: str = "n"


@dataclass
class PatternEdge:
    src: str
    role: str
    dst: str


@dataclass
class Pattern:
    """A connected little graph of variables, matched or instantiated."""

    nodes: list[PatternNode]
    edges: list[PatternEdge] = field(default_factory=list)
    head: Optional[str] = None

    def keys(self) -> list[str]:
        return [pn.key for pn in self.nodes]

    def node(self, key: str) -> PatternNode:
        for pn in self.nodes:
            if pn.key == key:
                return pn
        raise SemNetError(f"pattern has no node {key!r}")

    def predicate_keys(self) -> set[str]:
        return {e.src for e in self.edges}

    def validate(self, roles: Iterable[str] = BUILTIN_ROLES, connected: bool = True) -> None:
        roleset = set(roles)
        keys = self.keys()
        if not keys:
            raise SemNetError("empty pattern")
        if len(set(keys)) != len(keys):
            raise SemNetError("duplicate pattern keys")
        for e in self.edges:
            if e.role not in roleset:
                raise SemNetError(f"undeclared role {e.role!r}")
            if e.src not in keys or e.dst not in keys:
                raise SemNetError(f"edge {e} references unknown key")
        if self.head is not None and self.head not in keys:
            raise SemNetError(f"head {self.head!r} not in pattern")
        for pn in self.nodes:
            if pn.belief_min is not None and not (0.0 <= pn.belief_min <= 1.0):
                raise SemNetError("belief_min out of range")
        if connected and not self._connected(set(keys)):
            raise SemNetError("pattern is not connected")

    def _connected(self, keys: set[str]) -> bool:
        """Undirected reachability over ``keys`` using edges among them."""
        if len(keys) <= 1:
            return True
        adj: dict[str, set[str]] = {k: set() for k in keys}
        for e in self.edges:
            if e.src in keys and e.dst in keys:
                adj[e.src].add(e.dst)
                adj[e.dst].add(e.src)
        start = next(iter(keys))
        seen = {start}
        frontier = [start]
        while frontier:
            k = frontier.pop()
            for nxt in adj[k]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return len(seen) == len(keys)


# ---------------------------------------------------------------------------
# memory


class Memory:
    """Holds the node table and implements the level lifecycle.

    ``epoch`` counts content changes to attention/working memory; the
    halo must be re-derived whenever it moves. Halo-level changes never
    bump the epoch.
    """

    def __init__(self, extra_roles: Iterable[str] = ()):
        self.roles: set[str] = set(BUILTIN_ROLES) | {r.lower() for r in extra_roles}
        self.nodes: dict[int, NetNode] = {}
        self._next_id = 1
        self.epoch = 0
        self._tagged: dict[str, set[int]] = {}  # word -> node ids carrying it

    def tagged(self, word: str) -> set[int]:
        return self._tagged.get(word.lower(), set())

    # -- basic ops ---------------------------------------------------------

    def _bump(self, level: Level) -> None:
        if level is not Level.HALO:
            self.epoch += 1

    def add_node(
        self,
        lex: Optional[str] = None,
        belief: float = 1.0,
        level: Level = Level.WORKING,
        tick: int = 0,
        hint: str = "n",
        text: Optional[str] = None,
    ) -> int:
        if not (0.0 <= belief <= 1.0):
            raise SemNetError(f"belief {belief} out of [0,1]")
        nid = self._next_id
        self._next_id += 1
        node = NetNode(
            id=nid,
            name=f"{hint}-{nid}",
            lex={lex.lower()} if lex else set(),
            belief=belief,
            level=level,
            active=(level is Level.ATTENTION),
            created_tick=tick,
            text=text,
        )
        self.nodes[nid] = node
        if lex:
            self._tagged.setdefault(lex.lower(), set()).add(nid)
        self._bump(level)
        return nid

    def node(self, nid: int) -> NetNode:
        try:
            return self.nodes[nid]
        except KeyError:
            raise SemNetError(f"no node {nid}") from None

    def add_edge(self, src: int, role: str, dst) -> bool:
        """Add a role edge; returns False when it already existed.

        ``role='lex'`` adds a lexical tag (dst is the word) and
        ``role='str'`` attaches a literal string; other roles link two
        existing nodes.
        """
        role = role.lower()
        if role not in self.roles:
            raise SemNetError(f"undeclared role {role!r}")
        s = self.node(src)
        if role == "lex":
            if not isinstance(dst, str):
                raise SemNetError("lex edge target must be a word")
            return self.add_tag(src, dst)
        if role == "str":
            if not isinstance(dst, str):
                raise SemNetError("str edge target must be a string")
            if s.text == dst:
                return False
            s.text = dst
            self._bump(s.level)
            return True
        if not isinstance(dst, int):
            raise SemNetError("edge target must be a node id")
        d = self.node(dst)
        if (role, dst) in s.out:
            return False
        s.out.append((role, dst))
        d.inc.append((role, src))
        self._bump(s.level)
        return True

    def add_tag(self, nid: int, word: str) -> bool:
        node = self.node(nid)
        word = word.lower()
        if word in node.lex:
            return False
        node.lex.add(word)
        self._tagged.setdefault(word, set()).add(nid)
        self._bump(node.level)
        return True

    def set_belief(self, nid: int, belief: float) -> None:
        if not (0.0 <= belief <= 1.0):
            raise SemNetError(f"belief {belief} out of [0,1]")
        node = self.node(nid)
        if node.belief != belief:
            node.belief = belief
            self._bump(node.level)

    def set_level(self, nid: int, level: Level) -> None:
        node = self.node(nid)
        if node.level is level:
            return
        node.level = level
        self._bump(level)

    def activate(self, nid: int) -> None:
        node = self.node(nid)
        node.active = True
        node.deactivated_tick = None

    def deactivate(self, nid: int, tick: int) -> None:
        node = self.node(nid)
        if node.active:
            node.active = False
            node.deactivated_tick = tick

    def delete_node(self, nid: int) -> None:
        node = self.node(nid)
        for role, dst in node.out:
            other = self.nodes.get(dst)
            if other is not None:
                other.inc.remove((role, nid))
        for role, src in node.inc:
            other = self.nodes.get(src)
            if other is not None:
                other.out.remove((role, nid))
        for word in node.lex:
            self._tagged.get(word, set()).discard(nid)
        del self.nodes[nid]
        self._bump(node.level)

    # -- queries -----------------------------------------------------------

    def at_levels(self, levels: Iterable[Level]) -> list[NetNode]:
        lv = set(levels)
        return [n for n in self.nodes.values() if n.level in lv]

    def clear_halo(self) -> int:
        doomed = [n.id for n in self.nodes.values() if n.level is Level.HALO]
        for nid in doomed:
            node = self.nodes[nid]
            for role, dst in node.out:
                other = self.nodes.get(dst)
                if other is not None:
                    other.inc.remove((role, nid))
            for role, src in node.inc:
                other = self.nodes.get(src)
                if other is not None:
                    other.out.remove((role, nid))
            for word in node.lex:
                self._tagged.get(word, set()).discard(nid)
            del self.nodes[nid]
        return len(doomed)

    # -- lifecycle ---------------------------------------------------------

    def tick(self, now: int, retain_ticks: int, gc_ticks: int) -> bool:
        """Demote stale attention items and collect unanchored working memory.

        Idempotent within a tick: a second call with the same ``now``
        finds nothing further to demote or collect. Returns True when
        conscious content changed (callers must re-derive the halo).
        """
        changed = False
        for node in self.nodes.values():
            if (
                node.level is Level.ATTENTION
                and not node.active
                and node.deactivated_tick is not None
                and now - node.deactivated_tick > retain_ticks
            ):
                node.level = Level.WORKING  # demotion only; content unchanged

        # anchors: active items plus anything handled recently enough
        anchors = [
            n.id
            for n in self.nodes.values()
            if n.level is not Level.HALO
            and (
                n.active
                or (
                    n.deactivated_tick is not None
                    and now - n.deactivated_tick <= gc_ticks
                )
            )
        ]
        # outgoing edges always anchor (an event keeps its participants);
        # incoming edges anchor only property predications, so facts about
        # a live object survive while old events that merely mention a
        # shared hub node (the robot itself, a known person) fade away
        reached: set[int] = set(anchors)
        frontier = list(anchors)
        while frontier:
            nid = frontier.pop()
            node = self.nodes[nid]
            for role, other in node.out:
                o = self.nodes[other]
                if o.level is not Level.HALO and other not in reached:
                    reached.add(other)
                    frontier.append(other)
            for role, other in node.inc:
                if role not in ANCHOR_BACK_ROLES:
                    continue
                o = self.nodes[other]
                if o.level is not Level.HALO and other not in reached:
                    reached.add(other)
                    frontier.append(other)
        doomed = [
            n.id
            for n in self.nodes.values()
            if n.level is Level.WORKING and n.id not in reached
        ]
        if doomed:
            changed = True
            for nid in doomed:
                self.delete_node(nid)
            self.clear_halo()  # halo may reference the deleted context
        return changed

    # -- serialization -----------------------------------------------------

    def dump_records(self, levels: Iterable[Level] = ALL_LEVELS) -> list[dict]:
        lv = set(levels)
        records = []
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            if node.level not in lv:
                continue
            edges = [{"role": role, "to": dst} for role, dst in node.out]
            if node.text is not None:
                edges.append({"role": "str", "to": node.text})
            edges.sort(key=lambda e: (e["role"], str(e["to"])))
            records.append(
                {
                    "id": node.id,
                    "lex": sorted(node.lex),
                    "belief": node.belief,
                    "level": node.level.value,
                    "active": node.active,
                    "edges": edges,
                }
            )
        return records

    def dump_lines(self, levels: Iterable[Level] = ALL_LEVELS) -> str:
        return "\n".join(
            json.dumps(r, separators=(",", ":")) for r in self.dump_records(levels)
        )


# ---------------------------------------------------------------------------
# matching


def match_pattern(
    memory: Memory,
    pattern: Pattern,
    levels: Iterable[Level] = CONSCIOUS,
    belief_min: float = 0.0,
    prebound: Optional[dict[str, int]] = None,
) -> list[dict[str, int]]:
    """All consistent bindings of ``pattern`` into ``memory``.

    A binding maps every pattern key to a node id at one of ``levels``
    with belief >= the threshold (per-node ``belief_min`` tightens it),
    carrying the wanted lexical tag if the pattern node names one, and
    realizing every pattern edge. Distinct predicate pattern nodes bind
    injectively; pure object nodes may share a target. ``prebound``
    pins keys ahead of the search; pinned nodes still have to satisfy
    the node's own constraints. Result order is deterministic: sorted
    by the tuple of bound ids in pattern-node declaration order.
    """
    lv = set(levels)
    prebound = prebound or {}
    pred_keys = pattern.predicate_keys()

    # adjacency for early edge checking
    by_key: dict[str, PatternNode] = {pn.key: pn for pn in pattern.nodes}
    edges_of: dict[str, list[PatternEdge]] = {k: [] for k in by_key}
    for e in pattern.edges:
        edges_of[e.src].append(e)
        edges_of[e.dst].append(e)

    def eligible(pn: PatternNode, node: NetNode) -> bool:
        if node.level not in lv:
            return False
        floor = belief_min
        if pn.belief_min is not None:
            floor = max(floor, pn.belief_min)
        if node.belief < floor:
            return False
        if pn.lex is not None and not node.has_tag(pn.lex):
            return False
        return True

    # order: prebound keys first, then declaration order
    order = [pn for pn in pattern.nodes if pn.key in prebound] + [
        pn for pn in pattern.nodes if pn.key not in prebound
    ]

    results: list[dict[str, int]] = []
    assignment: dict[str, int] = {}

    def consistent(key: str, nid: int) -> bool:
        node = memory.nodes.get(nid)
        if node is None:
            return False
        if key in pred_keys:
            for other in pred_keys:
                if other != key and assignment.get(other) == nid:
                    return False
        for e in edges_of[key]:
            if e.src == key and e.dst in assignment:
                if (e.role, assignment[e.dst]) not in node.out:
                    return False
            if e.dst == key and e.src in assignment:
                src_node = memory.nodes[assignment[e.src]]
                if (e.role, nid) not in src_node.out:
                    return False
        return True

    def search(i: int) -> None:
        if i == len(order):
            results.append(dict(assignment))
            return
        pn = order[i]
        if pn.key in prebound:
            nid = prebound[pn.key]
            node = memory.nodes.get(nid)
            if node is not None and eligible(pn, node) and consistent(pn.key, nid):
                assignment[pn.key] = nid
                search(i + 1)
                del assignment[pn.key]
            return
        # pool: tag-indexed when the node is lex-constrained
        pool = sorted(memory.tagged(pn.lex)) if pn.lex is not None else sorted(memory.nodes)
        for nid in pool:
            node = memory.nodes.get(nid)
            if node is not None and eligible(pn, node) and consistent(pn.key, nid):
                assignment[pn.key] = nid
                search(i + 1)
                del assignment[pn.key]

    search(0)
    key_order = pattern.keys()
    results.sort(key=lambda b: tuple(b[k] for k in key_order))
    return results


# ---------------------------------------------------------------------------
# instantiation


def assert_instance(
    memory: Memory,
    template: Pattern,
    binding: Optional[dict[str, int]] = None,
    level: Level = Level.WORKING,
    belief: float = 1.0,
    tick: int = 0,
) -> dict[str, int]:
    """Materialize ``template`` into memory under ``binding``.

    Bound keys reuse their nodes (gaining the template's lexical tag if
    missing - this is how alias rules graft a second name onto a node).
    Unbound keys must be marked ``is_new`` and are created at ``level``
    with ``belief``. Returns the completed key->id map; created ids are
    the map entries absent from the input binding.
    """
    env: dict[str, int] = dict(binding or {})
    for pn in template.nodes:
        if pn.key in env:
            node = memory.node(env[pn.key])  # validates the id
            if pn.lex:
                memory.add_tag(node.id, pn.lex)
            if pn.text is not None and node.text is None:
                memory.add_edge(node.id, "str", pn.text)
        else:
            if not pn.is_new:
                raise SemNetError(
                    f"template key {pn.key!r} is unbound and not marked new"
                )
            env[pn.key] = memory.add_node(
                lex=pn.lex,
                belief=belief,
                level=level,
                tick=tick,
                hint=pn.hint,
                text=pn.text,
            )
    for e in template.edges:
        memory.add_edge(env[e.src], e.role, env[e.dst])
    return env
