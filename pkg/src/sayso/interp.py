"""Directive interpreter: foci, the directive lifecycle, and backtracking.

The engine owns every moving part: memory, inference rules, the
operator store, the simulation kernel, and a seeded random generator.
Each tick it senses, refreshes the inference halo if conscious memory
changed, services the attention buffer youngest-focus-first, then
advances the physics.

A posted chain becomes a focus. The chain's plays run in order; within
a play the required directives interleave until all finish, while
auxiliaries ride along and are cut when the play completes. A DO runs
the three-phase cycle: every matching before-advice operator first,
then one selected expansion at a time until one works, then every
matching after-advice operator no matter what. A PUNT poisons its
chain: the chain fails at once and the owning directive gives up
retrying, which is how prohibitions stop a command cold.

Everything observable lands in the event log as one JSON record per
line; identical inputs and seed reproduce the log byte for byte.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .config import DEFAULT_CONFIG, EngineConfig
from .kernel import ActionArgs, Kernel, World
from .lang import Grammar
from .lang.compiler import Compiled, compile_utterance
from .policy import (
    Candidate,
    Chain,
    DirectiveKind,
    DirectiveTemplate,
    Operator,
    OperatorStore,
    Play,
    desperation_threshold,
    find_candidates,
    select,
)
from .rules import Rule, refresh_halo
from .semnet import (
    CONSCIOUS,
    Level,
    Memory,
    Pattern,
    PatternEdge,
    PatternNode,
    assert_instance,
    match_pattern,
)

PENDING = "PENDING"
RUNNING = "RUNNING"
DONE = "DONE"
FAILED = "FAILED"
TERMINATED = "TERMINATED"

_FINISHED = (DONE, FAILED, TERMINATED)


@dataclass
class Directive:
    """A runtime directive instance over materialized payload nodes."""

    did: int
    kind: DirectiveKind
    head: Optional[int]
    keys: list[int]
    focus: "Focus"
    status: str = PENDING
    punted: bool = False
    tried: set[int] = field(default_factory=set)
    stalled: int = 0
    body: Optional["ChainRun"] = None      # current operator expansion
    group: Optional[list["Directive"]] = None  # ANTE/POST advice children
    phase: int = 0                          # DO: 0 before, 1 expand, 2 after
    do_ok: bool = False
    handle: Optional[int] = None            # kernel action id for FCN
    child: Optional["Directive"] = None     # ACH's inner DO
    depth: int = 0                          # expansion nesting, capped by config
    given: set[int] = field(default_factory=set)  # payload nodes bound, not asked

    def finished(self) -> bool:
        return self.status in _FINISHED


class PlayRun:
    def __init__(self, required: list[Directive], auxiliary: list[Directive]):
        self.required = required
        self.auxiliary = auxiliary


class ChainRun:
    def __init__(self, plays: list[PlayRun]):
        self.plays = plays
        self.idx = 0
        self.status = RUNNING
        self.punted = False


@dataclass
class Focus:
    fid: int
    posted_tick: int
    speaker: Optional[str] = None
    status: str = RUNNING
    root: Optional[ChainRun] = None  # set right after construction


@dataclass
class Heard:
    """What the engine made of one utterance."""

    kind: str                      # command | fact | operator | rule | alias
    name: str = ""
    focus: Optional[Focus] = None


class Engine:
    """One robot mind: memory, knowledge, interpreter, and body."""

    def __init__(
        self,
        grammar: Grammar,
        world: World,
        config: EngineConfig = DEFAULT_CONFIG,
        seed: int = 0,
        user: str = "user",
    ):
        self.grammar = grammar
        self.config = config
        self.user = user
        self.memory = Memory(extra_roles=grammar.extra_roles)
        self.rules: list[Rule] = []
        self.ops = OperatorStore()
        self.kernel = Kernel(world, config)
        self.rng = random.Random(seed)
        self.seed = seed
        self.tick = 0
        self.foci: list[Focus] = []
        self.events: list[str] = []
        self._next_fid = 1
        self._next_did = 1
        self._halo_epoch = -1
        self._fuel = 0

    # -- knowledge intake ---------------------------------------------------

    def add_operator(self, op: Operator) -> Operator:
        return self.ops.add(op, roles=self.memory.roles)

    def add_rule(self, rule: Rule) -> Rule:
        rule.validate(self.memory.roles)
        self.rules.append(rule)
        self._halo_epoch = -1  # force re-derivation
        return rule

    def load_kb(self, ops: list[Operator], rules: list[Rule]) -> None:
        for op in ops:
            self.add_operator(op)
        for rule in rules:
            self.add_rule(rule)

    def hear(self, text: str, speaker: Optional[str] = None) -> Heard:
        """Parse one utterance and either learn from it or start doing it.

        Raises ParseError for utterances outside the grammar.
        """
        speaker = speaker or self.user
        compiled: Compiled = compile_utterance(text, self.grammar, speaker=speaker)
        if compiled.operator is not None:
            self.add_operator(compiled.operator)
            return Heard("operator", name=compiled.operator.name)
        if compiled.rule is not None:
            self.add_rule(compiled.rule)
            return Heard(compiled.klass, name=compiled.rule.name)
        focus = self.post_chain(compiled.chain, speaker=speaker)
        return Heard(compiled.klass, focus=focus)

    # -- posting chains -------------------------------------------------------

    def post_chain(self, chain: Chain, speaker: Optional[str] = None) -> Focus:
        focus = Focus(self._next_fid, self.tick, speaker=speaker)
        self._next_fid += 1
        focus.root = self._materialize_chain(chain, {}, focus)
        self.foci.append(focus)
        return focus

    def _materialize_chain(self, chain: Chain, binding: dict[str, int], focus: Focus, depth: int = 0) -> ChainRun:
        env = dict(binding)
        for pn in chain.graph.nodes:
            if pn.unify and pn.key not in env and pn.lex:
                found = self._find_unify(pn.lex)
                if found is not None:
                    env[pn.key] = found
        provided = set(env)  # identities known before assertion, not questions
        env = assert_instance(
            self.memory, chain.graph, binding=env,
            level=Level.ATTENTION, belief=1.0, tick=self.tick,
        )
        # question payloads carry no conviction: a check must not assert
        # the very fact it is checking
        question_keys: set[str] = set()
        fact_keys: set[str] = set(provided)
        for play in chain.plays:
            for d in play.required + play.auxiliary:
                sink = question_keys if d.kind in (DirectiveKind.CHK, DirectiveKind.FIND) else fact_keys
                sink.update(d.keys)
        for key in question_keys - fact_keys:
            self.memory.set_belief(env[key], 0.0)
        given = {env[k] for k in provided}

        plays = []
        for play in chain.plays:
            required = [self._make_directive(d, env, focus, depth, given) for d in play.required]
            auxiliary = [self._make_directive(d, env, focus, depth, given) for d in play.auxiliary]
            plays.append(PlayRun(required, auxiliary))
        return ChainRun(plays)

    def _make_directive(
        self, template, env: dict[str, int], focus: Focus, depth: int = 0,
        given: Optional[set[int]] = None,
    ) -> Directive:
        keys = [env[k] for k in template.keys]
        d = Directive(
            did=self._next_did,
            kind=template.kind,
            head=env[template.head] if template.head is not None else None,
            keys=keys,
            focus=focus,
            depth=depth,
            given=set(keys) & given if given else set(),
        )
        self._next_did += 1
        return d

    def _find_unify(self, lex: str) -> Optional[int]:
        """Newest conscious node carrying the tag; None to create fresh."""
        best = None
        for nid in self.memory.tagged(lex):
            node = self.memory.nodes[nid]
            if node.level in CONSCIOUS and (best is None or nid > best):
                best = nid
        return best

    # -- the tick --------------------------------------------------------------

    def step(self) -> None:
        now = self.tick
        self._fuel = self.config.max_transitions_per_tick

        if self.kernel.proximity_alert(now):
            self._post_proximity()

        self.memory.tick(now, self.config.retain_ticks, self.config.gc_ticks)
        if self.memory.epoch != self._halo_epoch:
            refresh_halo(
                self.memory, self.rules,
                belief_min=self.config.belief_threshold,
                passes=self.config.halo_passes, tick=now,
            )
            self._halo_epoch = self.memory.epoch

        for focus in sorted(self.foci, key=lambda f: -f.fid):
            if focus.status is not RUNNING:
                continue
            self._step_chain(focus.root)
            if focus.root.status in (DONE, FAILED):
                focus.status = focus.root.status
                self.kernel.drop_focus(focus.fid)
                self._log(focus.fid, 0, "FOCUS", transition=focus.status)

        self.kernel.advance(now)
        for fid, did, text in self.kernel.take_speech():
            self._log(fid, did, "FCN", speech=text)
        self.tick += 1

    def busy(self) -> bool:
        return any(f.status is RUNNING for f in self.foci)

    def run_until_idle(self, budget: Optional[int] = None) -> bool:
        """Tick until every focus settles; False if the budget ran out."""
        limit = budget if budget is not None else self.config.repl_tick_budget
        for _ in range(limit):
            if not self.busy():
                return True
            self.step()
        return not self.busy()

    def abort_foci(self) -> None:
        """Terminate everything in flight (the reset path)."""
        for focus in self.foci:
            if focus.status is RUNNING:
                for play in focus.root.plays:
                    for d in play.required + play.auxiliary:
                        self._terminate(d)
                focus.root.status = FAILED
                focus.status = FAILED
                self.kernel.drop_focus(focus.fid)
                self._log(focus.fid, 0, "FOCUS", transition=TERMINATED)

    def _post_proximity(self) -> None:
        graph = Pattern(
            nodes=[
                PatternNode("hq-1", lex="close", is_new=True, hint="hq"),
                PatternNode("obj-1", is_new=True, hint="obj"),
                PatternNode("deg-1", lex="very", is_new=True, hint="deg"),
            ],
            edges=[PatternEdge("hq-1", "hq", "obj-1"), PatternEdge("deg-1", "deg", "hq-1")],
            head="hq-1",
        )
        chain = Chain(
            graph=graph,
            plays=[Play([DirectiveTemplate(DirectiveKind.NOTE, head="hq-1", keys=["hq-1", "obj-1", "deg-1"])])],
        )
        self.post_chain(chain, speaker=None)

    # -- chain/play stepping -------------------------------------------------------

    def _step_chain(self, run: ChainRun) -> None:
        while run.status is RUNNING and self._fuel > 0:
            if run.idx >= len(run.plays):
                run.status = DONE
                return
            play = run.plays[run.idx]
            for d in play.required + play.auxiliary:
                if not d.finished():
                    self._step_directive(d)
            failed = [d for d in play.required if d.status is FAILED]
            if failed:
                run.punted = run.punted or any(d.punted for d in failed)
                self._cut_play(play)
                run.status = FAILED
                return
            gating = [d for d in play.required if d.kind is not DirectiveKind.KEEP]
            if all(d.status in (DONE, TERMINATED) for d in gating):
                self._cut_play(play)
                run.idx += 1
                self._fuel -= 1
                continue
            return

    def _cut_play(self, play: PlayRun) -> None:
        for d in play.auxiliary + [r for r in play.required if r.kind is DirectiveKind.KEEP]:
            self._terminate(d)

    def _terminate(self, d: Directive) -> None:
        if d.finished():
            return
        was_running = d.status is RUNNING
        d.status = TERMINATED
        if d.handle is not None:
            self.kernel.cancel(d.handle)
        for sub in self._subdirectives(d):
            self._terminate(sub)
        self._release_payload(d)
        if was_running:
            self._log(d.focus.fid, d.did, d.kind.value, transition=TERMINATED)

    def _subdirectives(self, d: Directive):
        if d.body is not None:
            for play in d.body.plays:
                yield from play.required
                yield from play.auxiliary
        if d.group:
            yield from d.group
        if d.child is not None:
            yield d.child

    # -- directive stepping -----------------------------------------------------------

    def _step_directive(self, d: Directive) -> None:
        if self._fuel <= 0 or d.finished():
            return
        if d.status is PENDING:
            d.status = RUNNING
            self._fuel -= 1
            self._log(d.focus.fid, d.did, d.kind.value, transition=RUNNING)
            if d.kind is DirectiveKind.FCN:
                self._start_fcn(d)
                if d.finished():
                    return
            elif d.kind is DirectiveKind.PUNT:
                d.punted = True
                self._complete(d, FAILED)
                return
        step = {
            DirectiveKind.NOTE: self._run_note,
            DirectiveKind.DO: self._run_do,
            DirectiveKind.ANTE: self._run_preset,
            DirectiveKind.POST: self._run_preset,
            DirectiveKind.CHK: self._run_chk,
            DirectiveKind.FIND: self._run_find,
            DirectiveKind.ACH: self._run_ach,
            DirectiveKind.KEEP: self._run_keep,
            DirectiveKind.FCN: self._run_fcn,
            DirectiveKind.PUNT: lambda _: None,
        }[d.kind]
        step(d)

    def _complete(self, d: Directive, status: str) -> None:
        d.status = status
        self._fuel -= 1
        self._release_payload(d)
        self._log(d.focus.fid, d.did, d.kind.value, transition=status)

    def _release_payload(self, d: Directive) -> None:
        for nid in d.keys:
            if nid in self.memory.nodes:
                self.memory.deactivate(nid, self.tick)

    # -- candidate plumbing ----------------------------------------------------

    def _candidates(self, kind: DirectiveKind, d: Directive, belief_min: Optional[float] = None) -> list[Candidate]:
        return find_candidates(
            self.memory,
            self.ops,
            kind,
            d.head,
            self.config.belief_threshold if belief_min is None else belief_min,
            tried=d.tried,
            gamma=self.config.explore_exponent,
            count_edges=self.config.specificity_counts_edges,
        )

    def _expand(self, cand: Candidate, d: Directive) -> ChainRun:
        d.tried.add(cand.op.oid)
        return self._materialize_chain(cand.op.body, cand.binding, d.focus, d.depth + 1)

    def _too_deep(self, d: Directive) -> bool:
        # runaway self-recursive procedures bottom out here instead of
        # growing the tree without bound
        return d.depth >= self.config.max_chain_depth

    def _select_loop(self, d: Directive, kind: DirectiveKind, exhausted_status: str, verify=None) -> None:
        """Shared try-candidates-until-one-completes engine.

        ``verify`` (when given) must return True for a completed body to
        count; otherwise the next candidate is tried. A PUNT anywhere in
        a body stops the retries outright.
        """
        while self._fuel > 0:
            if d.body is None:
                cands = [] if self._too_deep(d) else self._candidates(kind, d)
                if not cands:
                    self._complete(d, exhausted_status)
                    return
                d.body = self._expand(select(cands, self.rng), d)
            self._step_chain(d.body)
            if d.body.status is RUNNING:
                return
            punted = d.body.punted
            delivered = d.body.status is DONE
            d.body = None
            if punted:
                d.punted = True
                self._complete(d, DONE if d.kind is DirectiveKind.NOTE else FAILED)
                return
            if delivered and (verify is None or verify()):
                self._complete(d, DONE)
                return
            # expansion failed or did not deliver: try the next candidate

    # -- kind semantics -----------------------------------------------------------

    def _run_note(self, d: Directive) -> None:
        # payload was asserted at materialization; handlers are optional
        # and exhaustion still counts as success
        self._select_loop(d, DirectiveKind.NOTE, exhausted_status=DONE)

    def _run_do(self, d: Directive) -> None:
        while self._fuel > 0:
            if d.phase == 0:
                if d.group is None:
                    cands = [] if self._too_deep(d) else self._candidates(DirectiveKind.ANTE, d)
                    d.group = [self._advice_child(c, DirectiveKind.ANTE, d) for c in cands]
                for sub in d.group:
                    if not sub.finished():
                        self._step_directive(sub)
                if not all(sub.finished() for sub in d.group):
                    return
                d.punted = d.punted or any(sub.punted for sub in d.group)
                d.group = None
                d.phase = 1
                continue
            if d.phase == 1:
                if d.punted:
                    d.phase = 2  # poisoned: no expansion, straight to after-advice
                    continue
                if d.body is None:
                    if self._too_deep(d):
                        d.phase = 2
                        continue
                    threshold = desperation_threshold(
                        self.config.belief_threshold, d.stalled,
                        self.config.desperation_step, self.config.desperation_floor,
                    )
                    cands = self._candidates(DirectiveKind.DO, d, belief_min=threshold)
                    if not cands:
                        if threshold <= self.config.desperation_floor:
                            d.phase = 2  # nothing to run, ever
                            continue
                        d.stalled += 1
                        return
                    d.body = self._expand(select(cands, self.rng), d)
                self._step_chain(d.body)
                if d.body.status is RUNNING:
                    return
                if d.body.status is DONE:
                    d.do_ok = True
                elif d.body.punted:
                    d.punted = True
                else:
                    d.body = None
                    continue  # backtrack: next candidate
                d.phase = 2
                continue
            # phase 2: every matching after-advice op runs, success or not
            if d.group is None:
                cands = [] if self._too_deep(d) else self._candidates(DirectiveKind.POST, d)
                d.group = [self._advice_child(c, DirectiveKind.POST, d) for c in cands]
            for sub in d.group:
                if not sub.finished():
                    self._step_directive(sub)
            if not all(sub.finished() for sub in d.group):
                return
            self._complete(d, DONE if d.do_ok and not d.punted else FAILED)
            return

    def _advice_child(self, cand: Candidate, kind: DirectiveKind, parent: Directive) -> Directive:
        child = Directive(
            did=self._next_did, kind=kind, head=parent.head, keys=[], focus=parent.focus,
            depth=parent.depth + 1,
        )
        self._next_did += 1
        child.body = self._materialize_chain(cand.op.body, cand.binding, parent.focus, parent.depth + 1)
        return child

    def _run_preset(self, d: Directive) -> None:
        self._step_chain(d.body)
        if d.body.status is RUNNING:
            return
        d.punted = d.body.punted
        self._complete(d, d.body.status)

    def _run_fcn(self, d: Directive) -> None:
        status = self.kernel.status(d.handle)
        if status != "RUNNING":
            self._complete(d, DONE if status == "DONE" else FAILED)

    def _start_fcn(self, d: Directive) -> None:
        name, args = self._fcn_spec(d)
        if name is None or not self.kernel.known_function(name):
            self._complete(d, FAILED)
            return
        d.handle = self.kernel.start(name, args, focus=d.focus.fid, directive=d.did)
        self._log(
            d.focus.fid, d.did, "FCN",
            **{"fcn-call": name, "args": sorted(args.dirs) + sorted(args.degs)},
        )

    def _fcn_spec(self, d: Directive) -> tuple[Optional[str], ActionArgs]:
        head = self.memory.node(d.head)
        name = None
        for tag in sorted(head.lex):
            if self.kernel.known_function(tag):
                name = tag
                break
        if name is None and head.lex:
            name = sorted(head.lex)[0]
        dirs: set[str] = set()
        degs: set[str] = set()
        text: Optional[str] = None
        target: Optional[str] = None
        for role, dst in head.out:
            if role != "arg":
                continue
            act = self.memory.node(dst)
            for r2, src in act.inc:
                mod = self.memory.nodes.get(src)
                if mod is None:
                    continue
                if r2 == "dir":
                    dirs |= mod.lex
                elif r2 == "deg":
                    degs |= mod.lex
            for r2, d2 in act.out:
                if r2 == "obj":
                    obj = self.memory.node(d2)
                    if obj.text is not None:
                        text = obj.text
                    elif obj.lex and target is None:
                        target = sorted(obj.lex)[0]
        return name, ActionArgs(dirs=frozenset(dirs), degs=frozenset(degs), text=text, target=target)

    # -- constructed check/find/achieve/maintain semantics ---------------------------

    def _payload_query(self, d: Directive) -> list[dict[str, int]]:
        """Match the payload's shape against memory, excluding the payload.

        Nodes bound before assertion (trigger bindings, unified names) and
        argument nodes (pure edge targets) with conviction stay pinned to
        themselves; predicate nodes and unresolved placeholders become
        variables. A genuine answer binds every variable outside the
        payload, so a question can never satisfy itself.
        """
        own = set(d.keys)
        sources = set()
        for nid in d.keys:
            for _, dst in self.memory.node(nid).out:
                if dst in own:
                    sources.add(nid)
        nodes = []
        edges = []
        prebound: dict[str, int] = {}
        for nid in d.keys:
            node = self.memory.node(nid)
            key = f"q-{nid}"
            nodes.append(PatternNode(key, lex=sorted(node.lex)[0] if node.lex else None))
            if nid in d.given or (nid not in sources and node.belief > 0.0):
                prebound[key] = nid
        for nid in d.keys:
            for role, dst in self.memory.node(nid).out:
                if dst in own:
                    edges.append(PatternEdge(f"q-{nid}", role, f"q-{dst}"))
        found = match_pattern(
            self.memory,
            Pattern(nodes=nodes, edges=edges),
            levels=(Level.ATTENTION, Level.WORKING, Level.HALO),
            belief_min=self.config.belief_threshold,
            prebound=prebound,
        )
        return [
            b for b in found
            if not any(k not in prebound and v in own for k, v in b.items())
        ]

    def _run_chk(self, d: Directive) -> None:
        if d.body is None and self._payload_query(d):
            self._complete(d, DONE)
            return
        self._select_loop(
            d, DirectiveKind.CHK, exhausted_status=FAILED,
            verify=lambda: bool(self._payload_query(d)),
        )

    def _try_bind(self, d: Directive) -> bool:
        """FIND resolution: adopt the first answer into the payload slots."""
        found = self._payload_query(d)
        if not found:
            return False
        binding = found[0]
        for key, nid in binding.items():
            node = self.memory.node(nid)
            if node.level is Level.HALO:
                self.memory.set_level(nid, Level.WORKING)  # promote used halo fact
            qnid = int(key[2:])
            if qnid != nid and qnid in self.memory.nodes:
                for tag in sorted(node.lex):  # graft identity onto the slot
                    self.memory.add_tag(qnid, tag)
                self.memory.set_belief(qnid, max(self.memory.node(qnid).belief, node.belief))
        return True

    def _run_find(self, d: Directive) -> None:
        if d.body is None and self._try_bind(d):
            self._complete(d, DONE)
            return
        self._select_loop(
            d, DirectiveKind.FIND, exhausted_status=FAILED,
            verify=lambda: self._try_bind(d),
        )

    def _run_ach(self, d: Directive) -> None:
        if d.child is None:
            if self._payload_query(d):
                self._complete(d, DONE)  # already true: no action
                return
            d.child = Directive(
                did=self._next_did, kind=DirectiveKind.DO, head=d.head,
                keys=list(d.keys), focus=d.focus, depth=d.depth + 1,
            )
            self._next_did += 1
        if not d.child.finished():
            self._step_directive(d.child)
            if not d.child.finished():
                return
        self._complete(d, DONE if self._payload_query(d) else FAILED)

    def _run_keep(self, d: Directive) -> None:
        # maintenance never finishes by itself; the owning play cuts it
        if d.body is not None:
            self._step_chain(d.body)
            if d.body.status is RUNNING:
                return
            d.body = None
            d.tried = set()  # each restart reselects from scratch
        cands = [] if self._too_deep(d) else self._candidates(DirectiveKind.DO, d)
        if cands:
            d.body = self._expand(select(cands, self.rng), d)
            self._step_chain(d.body)

    # -- reporting ---------------------------------------------------------------

    def _log(self, focus: int, directive: int, kind: str, **extra) -> None:
        rec = {"tick": self.tick, "focus": focus, "directive": directive, "kind": kind}
        rec.update(extra)
        self.events.append(json.dumps(rec, separators=(",", ":")))

    def log_text(self) -> str:
        return "\n".join(self.events) + ("\n" if self.events else "")

    def snapshot(self) -> dict:
        return self.kernel.snapshot(self.tick)

    def speech_texts(self) -> list[str]:
        out = []
        for line in self.events:
            rec = json.loads(line)
            if "speech" in rec:
                out.append(rec["speech"])
        return out

    def fcn_calls(self) -> list[str]:
        out = []
        for line in self.events:
            rec = json.loads(line)
            if "fcn-call" in rec:
                out.append(rec["fcn-call"])
        return out
