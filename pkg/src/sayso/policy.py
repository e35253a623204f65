"""Behavior operators and how one gets picked.

An operator volunteers a body (a chain of plays) whenever its trigger
pattern matches a pending directive's payload plus surrounding memory.
Several operators usually apply at once; the interpreter draws one at
random, weighted by preference**gamma * specificity, and falls back to
the others if the chosen body fails. ANTE/POST triggers are exempt from
sampling: all of them run.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .semnet import (
    Level,
    Memory,
    Pattern,
    SemNetError,
    match_pattern,
)

__all__ = [
    "DirectiveKind",
    "DirectiveTemplate",
    "Play",
    "Chain",
    "Operator",
    "OperatorStore",
    "Candidate",
    "find_candidates",
    "select",
    "desperation_threshold",
]

MATCH_LEVELS = (Level.ATTENTION, Level.WORKING, Level.HALO)


class DirectiveKind(Enum):
    NOTE = "NOTE"   # fact to react to; never fails
    DO = "DO"       # imperative; full ANTE-body-POST cycle
    ANTE = "ANTE"   # before-advice trigger
    POST = "POST"   # after-advice trigger
    CHK = "CHK"     # is this true?
    FIND = "FIND"   # bind an object satisfying this
    ACH = "ACH"     # make this true (check, act, re-check)
    KEEP = "KEEP"   # maintain a body until the parent play ends
    PUNT = "PUNT"   # poison pill: fail the chain, skip retries
    FCN = "FCN"     # grounded kernel call


@dataclass
class DirectiveTemplate:
    """One directive inside a chain template.

    ``keys`` name the payload nodes within the owning chain's graph;
    ``head`` is the payload node the directive is "about" (operator
    triggers anchor on it).
    """

    kind: DirectiveKind
    head: Optional[str] = None
    keys: list[str] = field(default_factory=list)


@dataclass
class Play:
    """One step of a chain: required directives run in parallel and must
    all finish; auxiliaries ride along and are cut at play completion."""

    required: list[DirectiveTemplate]
    auxiliary: list[DirectiveTemplate] = field(default_factory=list)


@dataclass
class Chain:
    """A body: shared template graph plus the plays that reference it."""

    graph: Pattern
    plays: list[Play]

    def validate(self, roles) -> None:
        if not self.plays:
            raise SemNetError("chain has no plays")
        keys = set(self.graph.keys())
        for play in self.plays:
            if not play.required:
                raise SemNetError("play has no required directives")
            for d in play.required + play.auxiliary:
                for k in d.keys:
                    if k not in keys:
                        raise SemNetError(f"directive references unknown key {k!r}")
                if d.head is not None and d.head not in keys:
                    raise SemNetError(f"directive head {d.head!r} unknown")
                # each payload must hang together; the whole graph need not,
                # since separate plays describe separate situations
                if d.keys and not self.graph._connected(set(d.keys)):
                    raise SemNetError(f"payload of {d.kind.value} is not connected")
        if self.graph.nodes:
            self.graph.validate(roles, connected=False)


@dataclass
class Operator:
    """Trigger pattern -> body chain, with a preference weight."""

    trigger_kind: DirectiveKind
    trigger: Pattern
    body: Chain
    pref: float = 1.0
    name: str = ""
    oid: int = -1

    def validate(self, roles) -> None:
        if self.pref <= 0.0:
            raise SemNetError(f"pref {self.pref} must be positive")
        self.trigger.validate(roles)
        # body keys must be trigger-bound or new
        trig_keys = set(self.trigger.keys())
        for pn in self.body.graph.nodes:
            if pn.key not in trig_keys and not pn.is_new:
                raise SemNetError(f"body key {pn.key!r} neither bound nor new")
        self.body.validate(roles)


class OperatorStore:
    """Ordered operator collection; ids are stable and never reused."""

    def __init__(self) -> None:
        self.ops: list[Operator] = []
        self._next = 1

    def add(self, op: Operator, roles=None) -> Operator:
        if roles is not None:
            op.validate(roles)
        op.oid = self._next
        self._next += 1
        self.ops.append(op)
        return op

    def __iter__(self):
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)


@dataclass
class Candidate:
    op: Operator
    binding: dict[str, int]
    weight: float


def find_candidates(
    memory: Memory,
    ops: Iterable[Operator],
    kind: DirectiveKind,
    head: Optional[int],
    belief_min: float,
    tried: Iterable[int] = (),
    gamma: float = 1.0,
    count_edges: bool = False,
) -> list[Candidate]:
    """Operators of ``kind`` whose trigger matches around ``head``.

    The trigger's head key is pinned to the directive's head node; the
    rest of the trigger may bind anywhere in attention, working memory,
    or the halo at or above ``belief_min``. Operators already in
    ``tried`` never come back for the same directive. Deterministic
    order: (operator id, binding ids).
    """
    tried_set = set(tried)
    out: list[Candidate] = []
    for op in ops:
        if op.trigger_kind is not kind or op.oid in tried_set:
            continue
        prebound = {}
        if op.trigger.head is not None and head is not None:
            prebound[op.trigger.head] = head
        bindings = match_pattern(
            memory, op.trigger, MATCH_LEVELS, belief_min, prebound=prebound
        )
        for b in bindings:
            spec = len(b) + (len(op.trigger.edges) if count_edges else 0)
            weight = (op.pref ** gamma) * spec
            out.append(Candidate(op, b, weight))
    out.sort(key=lambda c: (c.op.oid, tuple(sorted(c.binding.items()))))
    return out


def select(cands: list[Candidate], rng: random.Random) -> Candidate:
    """Weighted random draw; a lone candidate is taken without a draw."""
    if not cands:
        raise ValueError("select on empty candidate list")
    if len(cands) == 1:
        return cands[0]
    total = sum(c.weight for c in cands)
    r = rng.random() * total
    acc = 0.0
    for c in cands:
        acc += c.weight
        if r < acc:
            return c
    return cands[-1]  # float edge: r landed on the total


def desperation_threshold(
    base: float, stalled_ticks: int, step: float = 0.02, floor: float = 0.1
) -> float:
    """Match threshold after a directive has stalled for a while.

    Starts at ``base`` and decays linearly; never drops below ``floor``.
    """
    return max(base - stalled_ticks * step, floor)
