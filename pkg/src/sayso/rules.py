"""Inference rules and the speculative halo.

A rule pairs an antecedent pattern with a consequent template and a
confidence. The halo is rebuilt from scratch whenever conscious memory
changes: pass 1 matches antecedents against attention+working memory
only, pass 2 may also consume pass-1 conclusions. Deduction stops there;
deeper chains surface only if something promotes a halo fact into
working memory and triggers a fresh derivation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .semnet import (
    CONSCIOUS,
    Level,
    Memory,
    Pattern,
    SemNetError,
    assert_instance,
    match_pattern,
)

__all__ = ["Rule", "refresh_halo"]


@dataclass
class Rule:
    if_pattern: Pattern
    then_template: Pattern
    conf: float = 1.0
    name: str = ""

    def validate(self, roles) -> None:
        if not (0.0 < self.conf <= 1.0):
            raise SemNetError(f"rule conf {self.conf} out of (0,1]")
        self.if_pattern.validate(roles)
        # consequent keys are either bound by the antecedent or new
        if_keys = set(self.if_pattern.keys())
        for pn in self.then_template.nodes:
            if pn.key not in if_keys and not pn.is_new:
                raise SemNetError(
                    f"consequent key {pn.key!r} neither bound nor new"
                )
        self.then_template.validate(roles)


def _conclusion_exists(memory: Memory, rule: Rule, binding: dict) -> list[dict]:
    """Bindings of the consequent that are already present somewhere.

    Zero-belief copies do not count: those are open questions, and the
    answer they wait for must still get derived.
    """
    prebound = {
        k: v for k, v in binding.items() if k in set(rule.then_template.keys())
    }
    found = match_pattern(
        memory,
        rule.then_template,
        levels=(Level.ATTENTION, Level.WORKING, Level.HALO),
        belief_min=0.0,
        prebound=prebound,
    )
    return [
        b for b in found
        if all(memory.node(nid).belief > 0.0 for nid in b.values())
    ]


def refresh_halo(
    memory: Memory,
    rules: list[Rule],
    belief_min: float = 0.5,
    passes: int = 2,
    tick: int = 0,
) -> int:
    """Clear and re-derive the halo; returns the number of assertions made.

    Derived belief is rule confidence times the weakest premise. When an
    isomorphic conclusion already exists (any level), no duplicate is
    created; the existing copy just keeps the larger belief.
    """
    memory.clear_halo()
    made = 0
    for p in range(max(0, passes)):
        levels = CONSCIOUS if p == 0 else (Level.ATTENTION, Level.WORKING, Level.HALO)
        # snapshot matches first so conclusions of this pass feed the next
        fires: list[tuple[Rule, dict]] = []
        for rule in rules:
            for b in match_pattern(memory, rule.if_pattern, levels, belief_min):
                fires.append((rule, b))
        for rule, b in fires:
            premise = min(memory.node(nid).belief for nid in b.values())
            derived = rule.conf * premise
            existing = _conclusion_exists(memory, rule, b)
            if existing:
                for ex in existing:
                    for key, nid in ex.items():
                        node = memory.node(nid)
                        if node.level is Level.HALO and node.belief < derived:
                            node.belief = derived  # halo-only; no epoch bump
                continue
            bound = {k: v for k, v in b.items() if k in set(rule.then_template.keys())}
            assert_instance(
                memory,
                rule.then_template,
                binding=bound,
                level=Level.HALO,
                belief=derived,
                tick=tick,
            )
            made += 1
    return made
