"""Independent reference implementations used to check the engine.

These deliberately use the dumbest correct algorithms (exhaustive
enumeration, naive re-evaluation) and share no search code with the
package under test.
"""

from __future__ import annotations

import math
from itertools import product

from sayso.semnet import Level, Memory, Pattern


def brute_force_matches(
    memory: Memory,
    pattern: Pattern,
    levels=(Level.ATTENTION, Level.WORKING),
    belief_min: float = 0.0,
    prebound: dict | None = None,
) -> list[dict]:
    """Every binding, found by checking all |memory|^|pattern| assignments."""
    lv = set(levels)
    prebound = prebound or {}
    keys = [pn.key for pn in pattern.nodes]
    pred_keys = {e.src for e in pattern.edges}

    def node_ok(pn, nid):
        node = memory.nodes.get(nid)
        if node is None:
            return False
        if node.level not in lv:
            return False
        floor = belief_min
        if pn.belief_min is not None:
            floor = max(floor, pn.belief_min)
        if node.belief < floor:
            return False
        if pn.lex is not None and pn.lex.lower() not in node.lex:
            return False
        return True

    # pools hold every node passing the local (per-node) constraints; the
    # cross product below exhaustively enumerates all joint assignments
    pools = []
    for pn in pattern.nodes:
        if pn.key in prebound:
            nid = prebound[pn.key]
            pools.append([nid] if node_ok(pn, nid) else [])
        else:
            pools.append([nid for nid in sorted(memory.nodes) if node_ok(pn, nid)])
    out = []
    for combo in product(*pools):
        b = dict(zip(keys, combo))
        # predicate injectivity
        pred_ids = [b[k] for k in keys if k in pred_keys]
        if len(set(pred_ids)) != len(pred_ids):
            continue
        # every pattern edge realized
        ok = True
        for e in pattern.edges:
            src = memory.nodes[b[e.src]]
            if (e.role, b[e.dst]) not in src.out:
                ok = False
                break
        if ok:
            out.append(b)
    out.sort(key=lambda b: tuple(b[k] for k in keys))
    return out


def naive_two_round_halo(memory: Memory, rules, belief_min: float, passes: int = 2):
    """Re-derive the halo by naive semi-naive evaluation.

    Works for rules whose consequent is one new node (with a lexical
    tag) plus edges from it to antecedent-bound nodes - the shape the
    random rule generator in the tests produces. MUTATES ``memory``
    (materializes pass-1 conclusions); pass a throwaway copy. Returns
    expected conclusions [{lex, belief, edges}] with edges as
    (role, target_id), deduplicated with max-belief.
    """
    conclusions: dict[tuple, float] = {}

    def existing_match(lex, edges):
        # a node anywhere already carrying the tag and the exact edges?
        for node in memory.nodes.values():
            if lex is not None and lex not in node.lex:
                continue
            if all(e in node.out for e in edges):
                return True
        # or among conclusions derived so far this refresh
        return (lex, tuple(sorted(edges))) in conclusions

    for p in range(passes):
        if p == 0:
            lv = (Level.ATTENTION, Level.WORKING)
        else:
            lv = (Level.ATTENTION, Level.WORKING, Level.HALO)
        fires = []
        for rule in rules:
            for b in brute_force_matches(memory, rule.if_pattern, lv, belief_min):
                fires.append((rule, b))
        # second-pass matches may also bind conclusions of the first pass;
        # emulate by temporarily materializing them
        for rule, b in fires:
            premise = min(memory.nodes[nid].belief for nid in b.values())
            derived = rule.conf * premise
            new_keys = [
                pn for pn in rule.then_template.nodes if pn.key not in b
            ]
            assert len(new_keys) == 1, "oracle handles single-new-node rules"
            newpn = new_keys[0]
            edges = tuple(
                sorted(
                    (e.role, b[e.dst])
                    for e in rule.then_template.edges
                    if e.src == newpn.key
                )
            )
            lex = newpn.lex.lower() if newpn.lex else None
            sig = (lex, edges)
            if existing_match(lex, list(edges)):
                if sig in conclusions:
                    conclusions[sig] = max(conclusions[sig], derived)
                continue
            conclusions[sig] = derived
        if p == 0 and passes > 1:
            # materialize pass-1 conclusions so pass 2 can bind them
            for (lex, edges), belief in list(conclusions.items()):
                nid = memory.add_node(lex=lex, belief=belief, level=Level.HALO)
                for role, dst in edges:
                    memory.add_edge(nid, role, dst)
    return [
        {"lex": lex, "belief": belief, "edges": list(edges)}
        for (lex, edges), belief in conclusions.items()
    ]


def unicycle_endpoint(x0, y0, th0, v, omega, seconds):
    """Closed-form endpoint of constant-twist motion."""
    if abs(omega) < 1e-12:
        return (
            x0 + v * math.cos(th0) * seconds,
            y0 + v * math.sin(th0) * seconds,
            th0,
        )
    th1 = th0 + omega * seconds
    x1 = x0 + (v / omega) * (math.sin(th1) - math.sin(th0))
    y1 = y0 - (v / omega) * (math.cos(th1) - math.cos(th0))
    return x1, y1, th1


def unicycle_quadrature(x0, y0, th0, v, omega, seconds, steps=200_000):
    """The same endpoint by fine forward integration (independent check)."""
    dt = seconds / steps
    x, y, th = x0, y0, th0
    for _ in range(steps):
        x += v * math.cos(th) * dt
        y += v * math.sin(th) * dt
        th += omega * dt
    return x, y, th
