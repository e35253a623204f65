"""Compile digested utterances into rules, operators, and chains.

Five utterance classes come out of the parser:

  operator  "to X ..." / "if <fact> then <act>" / "never ... but instead"
  rule      "if something is a girl it is a person" / "girls are female"
  alias     "turn means rotate"
  fact      "mary is a girl"
  command   "drive forward and turn right"

Commands and facts become directive chains ready to post as a focus.
Teaching forms mutate the knowledge base instead. Every command chain
is prefixed with a speech-act record of who asked for it, which is what
permission advice latches onto later.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..policy import Chain, DirectiveKind, DirectiveTemplate, Operator, Play
from ..rules import Rule
from ..semnet import Pattern, PatternEdge, PatternNode
from .alist import AList, digest, tokenize
from .grammar import Grammar
from .parser import ParseError, parse


class CompileError(ValueError):
    pass


# preference phrasing -> operator weight
PREF_WEIGHTS = {
    "you could": 0.8,
    "you should": 1.0,
    "you must always": 1.2,
}

# hedge word -> rule confidence
HEDGE_CONF = {
    "always": 1.0,
    "usually": 0.8,
    "often": 0.8,
    "sometimes": 0.5,
}

_IRREGULAR_PLURALS = {
    "people": "person",
    "children": "child",
    "men": "man",
    "women": "woman",
}


def lemma(plural: str) -> str:
    if plural in _IRREGULAR_PLURALS:
        return _IRREGULAR_PLURALS[plural]
    if plural.endswith("es") and plural[:-2].endswith(("x", "s", "ch", "sh")):
        return plural[:-2]
    if plural.endswith("s"):
        return plural[:-1]
    return plural


class Builder:
    """Accumulates pattern nodes/edges with fresh hint-N keys.

    One builder covers a whole definition (trigger plus body, or
    condition plus conclusion) so keys never collide across the parts;
    ``mark``/``since`` slice the parts back out.
    """

    def __init__(self) -> None:
        self.nodes: list[PatternNode] = []
        self.edges: list[PatternEdge] = []
        self._n = 0

    def node(
        self,
        hint: str,
        lex: str | None = None,
        *,
        unify: bool = False,
        text: str | None = None,
    ) -> str:
        self._n += 1
        key = f"{hint}-{self._n}"
        self.nodes.append(
            PatternNode(key=key, lex=lex, is_new=True, unify=unify, text=text, hint=hint)
        )
        return key

    def edge(self, src: str, role: str, dst: str) -> None:
        self.edges.append(PatternEdge(src, role, dst))

    def mark(self) -> tuple[int, int]:
        return (len(self.nodes), len(self.edges))

    def since(self, mark: tuple[int, int]) -> tuple[list[PatternNode], list[PatternEdge]]:
        return (list(self.nodes[mark[0] :]), list(self.edges[mark[1] :]))

    def until(self, mark: tuple[int, int]) -> tuple[list[PatternNode], list[PatternEdge]]:
        return (list(self.nodes[: mark[0]]), list(self.edges[: mark[1]]))

    def keys_since(self, mark: tuple[int, int]) -> list[str]:
        return [pn.key for pn in self.nodes[mark[0] :]]

    def pattern(self, head: str | None = None) -> Pattern:
        return Pattern(list(self.nodes), list(self.edges), head)


def _clause(b: Builder, group: list[tuple[str, str]]) -> tuple[str, list[str]]:
    """One verb clause -> act node plus argument nodes. Returns (act, keys)."""
    mark = b.mark()
    act: str | None = None
    for name, value in group:
        if name == "act":
            act = b.node("act", lex=value)
        elif act is None:
            raise CompileError(f"clause argument {value!r} before its verb")
        elif name == "str":
            txt = b.node("txt", text=value)
            b.edge(act, "obj", txt)
        elif name == "dir":
            d = b.node("dir", lex=value)
            b.edge(d, "dir", act)
        elif name == "deg":
            g = b.node("deg", lex=value)
            b.edge(g, "deg", act)
        elif name == "name":
            o = b.node("obj", lex=value, unify=True)
            b.edge(act, "obj", o)
        elif name == "class":
            o = b.node("obj")
            k = b.node("ako", lex=value)
            b.edge(k, "ako", o)
            b.edge(act, "obj", o)
        elif name == "noun":
            o = b.node("obj", lex=value, unify=True)
            b.edge(act, "obj", o)
        else:
            raise CompileError(f"unexpected slot {name!r} in clause")
    if act is None:
        raise CompileError("clause has no verb")
    return act, b.keys_since(mark)


def _predicate(b: Builder, group: list[tuple[str, str]], subject: str) -> str:
    """'is very close' / 'is a person' applied to subject. Returns head."""
    slots = dict(group)
    if "class" in slots:
        head = b.node("ako", lex=slots["class"])
        b.edge(head, "ako", subject)
    elif "classpl" in slots:
        head = b.node("ako", lex=lemma(slots["classpl"]))
        b.edge(head, "ako", subject)
    elif "adj" in slots:
        head = b.node("hq", lex=slots["adj"])
        b.edge(head, "hq", subject)
    else:
        raise CompileError("predicate has neither class nor adjective")
    if "deg" in slots:
        g = b.node("deg", lex=slots["deg"])
        b.edge(g, "deg", head)
    return head


def _body_plays(
    b: Builder,
    groups: list[list[tuple[str, str]]],
    conjs: list[str],
    *,
    punt: bool = False,
) -> list[Play]:
    """Clause groups + connectives -> plays of DO directives.

    "then" closes the current play; "and" extends it with a parallel
    directive. A trailing PUNT play turns the body into veto advice.
    """
    plays: list[Play] = []
    current: list[DirectiveTemplate] = []
    for i, group in enumerate(groups):
        act, keys = _clause(b, group)
        current.append(DirectiveTemplate(DirectiveKind.DO, head=act, keys=keys))
        if i == len(groups) - 1 or conjs[i] == "then":
            plays.append(Play(required=current))
            current = []
    if punt:
        plays.append(Play(required=[DirectiveTemplate(DirectiveKind.PUNT)]))
    return plays


def _command_heads(plays: list[Play]) -> list[str]:
    return [d.head for play in plays for d in play.required if d.head is not None]


def compile_command(alist: AList, speaker: str) -> Chain:
    """Command -> speech-act NOTE play, then the requested DO plays."""
    b = Builder()
    plays = _body_plays(b, alist.groups(), alist.toplevel("conj"))
    tell = b.node("input", lex="tell")
    user = b.node("user", lex=speaker.lower(), unify=True)
    self_ = b.node("self", lex="you", unify=True)
    b.edge(tell, "agt", user)
    b.edge(tell, "dest", self_)
    for act in _command_heads(plays):
        b.edge(tell, "cmd", act)
    note = DirectiveTemplate(DirectiveKind.NOTE, head=tell, keys=[tell, user, self_])
    return Chain(b.pattern(), [Play(required=[note])] + plays)


def compile_fact(alist: AList) -> Chain:
    """Declarative fact -> a single NOTE chain."""
    b = Builder()
    subject_word = alist.first("name") or alist.first("noun")
    if subject_word is None:
        raise CompileError("fact has no subject")
    subject = b.node("obj", lex=subject_word, unify=True)
    pairs = [(n, v) for kind, n, v in alist.items if kind == "slot"]
    head = _predicate(b, pairs, subject)
    note = DirectiveTemplate(DirectiveKind.NOTE, head=head, keys=[pn.key for pn in b.nodes])
    return Chain(b.pattern(head), [Play(required=[note])])


def compile_rule(alist: AList) -> Rule:
    """Conditional or copular generic -> halo inference rule."""
    groups = alist.groups()
    if len(groups) != 2:
        raise CompileError("rule needs a condition and a conclusion")
    cond, conc = groups
    hedge = alist.first("hedge")
    conf = HEDGE_CONF.get(hedge, 1.0) if hedge else 1.0

    b = Builder()
    cond_slots = dict(cond)
    if "classpl" in cond_slots:  # "girls are ..."
        subject = b.node("obj")
        if_head = b.node("ako", lex=lemma(cond_slots["classpl"]))
        b.edge(if_head, "ako", subject)
    else:  # "if something is ..." / "if mary is ..."
        subject = b.node("obj", lex=cond_slots.get("name"))
        if_head = _predicate(b, cond, subject)
    split = b.mark()
    if_nodes, if_edges = b.until(split)
    if_pattern = Pattern(if_nodes, if_edges, head=if_head)

    then_head = _predicate(b, conc, subject)
    conc_nodes, conc_edges = b.since(split)
    then_nodes = [PatternNode(key=subject, is_new=False, hint="obj")] + conc_nodes
    then_template = Pattern(then_nodes, conc_edges, head=then_head)

    name = f"{if_pattern.node(if_head).lex or 'cond'}-{then_template.node(then_head).lex}"
    return Rule(if_pattern=if_pattern, then_template=then_template, conf=conf, name=name)


def compile_alias(alist: AList) -> Rule:
    """'X means Y' -> rule grafting tag Y onto every node tagged X."""
    frm = alist.first("alias-from")
    to = alist.first("alias-to")
    if not frm or not to:
        raise CompileError("alias needs two words")
    if_pattern = Pattern([PatternNode("w-1", lex=frm, hint="w")], head="w-1")
    then_template = Pattern([PatternNode("w-1", lex=to, is_new=False, hint="w")])
    return Rule(if_pattern, then_template, conf=1.0, name=f"alias-{frm}")


def compile_operator(alist: AList) -> Operator:
    """Teaching form -> operator with trigger kind per phrasing."""
    groups = alist.groups()
    conjs = alist.toplevel("conj")
    new_act = alist.first("new-act")

    if new_act is not None:  # "to X ..." procedure definition
        b = Builder()
        head = b.node("act", lex=new_act)
        split = b.mark()
        plays = _body_plays(b, groups, conjs)
        trig_nodes, trig_edges = b.until(split)
        body_nodes, body_edges = b.since(split)
        pref = PREF_WEIGHTS.get(alist.first("pref") or "", 1.0)
        return Operator(
            trigger_kind=DirectiveKind.DO,
            trigger=Pattern(trig_nodes, trig_edges, head),
            body=Chain(Pattern(body_nodes, body_edges), plays),
            pref=pref,
            name=f"to-{new_act}",
        )

    if alist.first("neg") is None and not _is_distrust(alist):
        # "if <fact> then <action>" reaction
        if len(groups) < 2:
            raise CompileError("reaction needs a condition and a body")
        b = Builder()
        cond_slots = dict(groups[0])
        subject = b.node("obj", lex=cond_slots.get("name"))
        head = _predicate(b, groups[0], subject)
        split = b.mark()
        plays = _body_plays(b, groups[1:], conjs)
        trig_nodes, trig_edges = b.until(split)
        body_nodes, body_edges = b.since(split)
        trigger = Pattern(trig_nodes, trig_edges, head)
        return Operator(
            trigger_kind=DirectiveKind.NOTE,
            trigger=trigger,
            body=Chain(Pattern(body_nodes, body_edges), plays),
            pref=1.0,
            name=f"on-{trigger.node(head).lex}",
        )

    # prohibition / permission: veto advice ending in a PUNT
    b = Builder()
    if _is_distrust(alist):
        # "if <name> tells you to do something don't but instead ..."
        author = alist.first("name")
        cmd = b.node("act")
        tell = b.node("input", lex="tell")
        user = b.node("user", lex=author)
        self_ = b.node("self", lex="you")
        b.edge(tell, "agt", user)
        b.edge(tell, "dest", self_)
        b.edge(tell, "cmd", cmd)
        head = cmd
        body_groups = groups
        name = f"distrust-{author}"
    else:
        # "never <clause> but instead ..."
        if len(groups) < 2:
            raise CompileError("prohibition needs a body")
        head, _ = _clause(b, groups[0])
        body_groups = groups[1:]
        name = f"never-{b.pattern().node(head).lex}"
    split = b.mark()
    plays = _body_plays(b, body_groups, conjs, punt=True)
    trig_nodes, trig_edges = b.until(split)
    body_nodes, body_edges = b.since(split)
    return Operator(
        trigger_kind=DirectiveKind.ANTE,
        trigger=Pattern(trig_nodes, trig_edges, head),
        body=Chain(Pattern(body_nodes, body_edges), plays),
        pref=1.0,
        name=name,
    )


def _is_distrust(alist: AList) -> bool:
    """A name slot before any bracket marks the tells-you form."""
    for kind, name, _ in alist.items:
        if kind == "open":
            return False
        if kind == "slot" and name == "name":
            return True
    return False


CLASS_ORDER = ["operator", "rule", "alias", "fact", "command"]


@dataclass
class Compiled:
    klass: str
    operator: Operator | None = None
    rule: Rule | None = None
    chain: Chain | None = None


def compile_utterance(text: str, grammar: Grammar, speaker: str = "user") -> Compiled:
    """Parse as the first utterance class that accepts the whole text."""
    tokens = tokenize(text)
    for i, tok in enumerate(tokens):
        if tok.lower not in grammar.terminals:
            raise ParseError(f"unknown word {tok.surface!r}", i)
    lowers = [t.lower for t in tokens]
    best: ParseError | None = None
    for klass in CLASS_ORDER:
        if klass not in grammar.starts:
            continue
        try:
            tree = parse(lowers, grammar, klass)
        except ParseError as err:
            if best is None or err.pos > best.pos:
                best = err
            continue
        alist = digest(tree, grammar, tokens, klass)
        if klass == "operator":
            return Compiled(klass, operator=compile_operator(alist))
        if klass == "rule":
            return Compiled(klass, rule=compile_rule(alist))
        if klass == "alias":
            return Compiled(klass, rule=compile_alias(alist))
        if klass == "fact":
            return Compiled(klass, chain=compile_fact(alist))
        return Compiled(klass, chain=compile_command(alist, speaker))
    assert best is not None
    raise best
