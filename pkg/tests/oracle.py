"""Brute-force reference evaluator and random graph/query generators.

The evaluator shares no code with the engine's matcher or expression
evaluator.  It enumerates every injective assignment of graph edges to the
relationship positions of a MATCH clause, derives node positions from edge
endpoints, and then filters.  It only reads the graph through ``nodes()``
and ``edges()``.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import Counter

from stockkg.cypher import ast as A
from stockkg.errors import GuardExceeded
from stockkg.graph import Edge, Node, PropertyGraph

MAX_NODES = 12
MAX_EDGES = 24


# -- values ----------------------------------------------------------------

def _num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _entity(v):
    if isinstance(v, Node):
        return ("node", v.id)
    if isinstance(v, Edge):
        return ("edge", v.id)
    return None


def eq3(a, b):
    if a is None or b is None:
        return None
    if _num(a) and _num(b):
        return a == b
    for t in (bool, str):
        if isinstance(a, t) and isinstance(b, t):
            return a == b
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        if len(a) != len(b):
            return False
        results = [eq3(x, y) for x, y in zip(a, b)]
        if False in results:
            return False
        return None if None in results else True
    ea, eb = _entity(a), _entity(b)
    if ea is not None and eb is not None:
        return ea == eb
    return False


def lt3(op, a, b):
    if a is None or b is None:
        return None
    if _num(a) and _num(b):
        if any(isinstance(x, float) and math.isnan(x) for x in (a, b)):
            return None
    elif not ((isinstance(a, bool) and isinstance(b, bool))
              or (isinstance(a, str) and isinstance(b, str))):
        return None
    return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]


def ev(b, e):
    if isinstance(e, A.Literal):
        return e.value
    if isinstance(e, A.Var):
        return b[e.name]
    if isinstance(e, A.PropAccess):
        t = b[e.var]
        return t.props.get(e.prop) if isinstance(t, (Node, Edge)) else None
    if isinstance(e, A.Paren):
        return ev(b, e.inner)
    if isinstance(e, A.ListLiteral):
        return [ev(b, x) for x in e.items]
    if isinstance(e, A.Cmp):
        l, r = ev(b, e.lhs), ev(b, e.rhs)
        if e.op == "=":
            return eq3(l, r)
        if e.op == "<>":
            x = eq3(l, r)
            return None if x is None else (not x)
        return lt3(e.op, l, r)
    if isinstance(e, A.In):
        l = ev(b, e.lhs)
        if l is None:
            return None
        results = [eq3(l, ev(b, x)) for x in e.rhs.items]
        if True in results:
            return True
        return None if None in results else False
    if isinstance(e, A.Not):
        x = ev(b, e.operand)
        return (not x) if isinstance(x, bool) else None
    if isinstance(e, (A.And, A.Or)):
        l, r = ev(b, e.lhs), ev(b, e.rhs)
        l = l if isinstance(l, bool) else None
        r = r if isinstance(r, bool) else None
        if isinstance(e, A.And):
            return False if False in (l, r) else (None if None in (l, r) else True)
        return True if True in (l, r) else (None if None in (l, r) else False)
    raise TypeError(e)


def order_key(v):
    """Documented ORDER BY order: Bool < numbers < NaN < Text < lists < nodes < edges < Null."""
    if v is None:
        return (6,)
    if isinstance(v, bool):
        return (0, v)
    if _num(v):
        return (1, 1, 0) if isinstance(v, float) and math.isnan(v) else (1, 0, v)
    if isinstance(v, str):
        return (2, v)
    if isinstance(v, (list, tuple)):
        return (3, tuple(order_key(x) for x in v))
    if isinstance(v, Node):
        return (4, v.id)
    return (5, v.id)


def canon(v):
    """Hashable form of a result cell for multiset comparison."""
    if isinstance(v, (Node, Edge)):
        return _entity(v)
    if isinstance(v, list):
        return ("list", tuple(canon(x) for x in v))
    if _num(v):
        return ("num", float(v))
    return (type(v).__name__, v)


# -- matching --------------------------------------------------------------

def _pattern_vars(clause):
    out = []
    for p in clause.patterns:
        for n in p.nodes:
            if n.var and n.var not in out:
                out.append(n.var)
        for r in p.rels:
            if r.var and r.var not in out:
                out.append(r.var)
    return out


def _node_fits(pat, node):
    return (all(l in node.labels for l in pat.labels)
            and all(eq3(node.props.get(k), ev({}, lit)) is True for k, lit in pat.props))


def _assign(b, var, value):
    if var is None:
        return True
    if var in b:
        cur = b[var]
        return cur is not None and _entity(cur) == _entity(value)
    b[var] = value
    return True


def _clause_matches(nodes, edges, clause, seed):
    rel_slots = [(pi, ri) for pi, p in enumerate(clause.patterns) for ri in range(len(p.rels))]
    free_nodes = [pi for pi, p in enumerate(clause.patterns) if not p.rels]
    by_id = {n.id: n for n in nodes}
    for edge_choice in itertools.permutations(edges, len(rel_slots)):
        chosen = dict(zip(rel_slots, edge_choice))
        # every rel slot has one or two orientations
        orient_options = []
        for slot in rel_slots:
            e = chosen[slot]
            rel = clause.patterns[slot[0]].rels[slot[1]]
            if rel.types and e.type not in rel.types:
                break
            if rel.direction == A.LEFT_TO_RIGHT:
                opts = [(e.src, e.dst)]
            elif rel.direction == A.RIGHT_TO_LEFT:
                opts = [(e.dst, e.src)]
            else:
                opts = sorted({(e.src, e.dst), (e.dst, e.src)})
            orient_options.append(opts)
        else:
            for orient in itertools.product(*orient_options):
                o = dict(zip(rel_slots, orient))
                for free in itertools.product(nodes, repeat=len(free_nodes)):
                    b = dict(seed)
                    ok = True
                    for pi, p in enumerate(clause.patterns):
                        if not ok:
                            break
                        if not p.rels:
                            n = free[free_nodes.index(pi)]
                            ok = _node_fits(p.nodes[0], n) and _assign(b, p.nodes[0].var, n)
                            continue
                        for ri, rel in enumerate(p.rels):
                            left, right = o[(pi, ri)]
                            if ri > 0 and o[(pi, ri - 1)][1] != left:
                                ok = False
                                break
                            ln, rn = by_id[left], by_id[right]
                            e = chosen[(pi, ri)]
                            if not (_node_fits(p.nodes[ri], ln) and _node_fits(p.nodes[ri + 1], rn)
                                    and _assign(b, p.nodes[ri].var, ln)
                                    and _assign(b, rel.var, e)
                                    and _assign(b, p.nodes[ri + 1].var, rn)):
                                ok = False
                                break
                    if ok:
                        yield b


def brute_force_execute(graph: PropertyGraph, query: A.Query):
    """Return (columns, rows) with rows in ORDER BY order when one is present."""
    nodes, edges = graph.nodes(), graph.edges()
    if len(nodes) > MAX_NODES or len(edges) > MAX_EDGES:
        raise GuardExceeded(f"oracle limited to {MAX_NODES} nodes and {MAX_EDGES} edges")
    rows = [{}]
    out, keyrows, columns = [], [], []
    for clause in query.clauses:
        if isinstance(clause, A.Match):
            new = []
            for seed in rows:
                hits = [b for b in _clause_matches(nodes, edges, clause, seed)
                        if clause.where is None or ev(b, clause.where) is True]
                if not hits and clause.optional:
                    filled = dict(seed)
                    for v in _pattern_vars(clause):
                        filled.setdefault(v, None)
                    hits = [filled]
                new.extend(hits)
            rows = new
        elif isinstance(clause, A.With):
            rows = [{it.name: ev(b, it.expr) for it in clause.items} for b in rows]
            if clause.where is not None:
                rows = [b for b in rows if ev(b, clause.where) is True]
        elif isinstance(clause, A.Return):
            columns = [it.name for it in clause.items]
            for b in rows:
                proj = {it.name: ev(b, it.expr) for it in clause.items}
                out.append([proj[c] for c in columns])
                keyrows.append({**b, **proj})
        elif isinstance(clause, A.OrderBy):
            idx = list(range(len(out)))
            for key in reversed(clause.keys):
                idx.sort(key=lambda i: order_key(ev(keyrows[i], key.expr)),
                         reverse=key.direction == A.DESC)
            out = [out[i] for i in idx]
    return columns, out


def multiset(rows) -> Counter:
    return Counter(tuple(canon(c) for c in row) for row in rows)


# -- generators ------------------------------------------------------------

LABELS = ("A", "B", "C")
TYPES = ("R", "S")
PROPS = ("x", "y", "s")


def random_graph(rng: random.Random, max_nodes: int = MAX_NODES,
                 max_edges: int = MAX_EDGES) -> PropertyGraph:
    g = PropertyGraph()
    n = rng.randint(1, max_nodes) if rng.random() < 0.2 else rng.randint(4, max_nodes)
    ids = []
    for _ in range(n):
        labels = rng.sample(LABELS, rng.randint(1, 2))
        props = {}
        if rng.random() < 0.8:
            props["x"] = rng.randint(-2, 3)
        if rng.random() < 0.5:
            props["y"] = rng.choice([0.5, 1.0, 2.5, -1.5, 3])
        if rng.random() < 0.6:
            props["s"] = rng.choice(["a", "b", "c"])
        if rng.random() < 0.2:
            props["f"] = rng.random() < 0.5
        if rng.random() < 0.1:
            props["tags"] = rng.sample(["a", "b"], rng.randint(0, 2))
        ids.append(g.create_node(labels, props))
    for _ in range(rng.randint(0, max_edges) if rng.random() < 0.2 else rng.randint(n, max(n, max_edges))):
        src, dst = rng.choice(ids), rng.choice(ids)
        props = {"w": rng.randint(0, 3)} if rng.random() < 0.6 else {}
        g.create_edge(src, rng.choice(TYPES), dst, props)
    return g


def _lit(rng):
    return rng.choice(["0", "1", "2", "-1", "2.5", '"a"', '"b"', "true", "false", "null"])


class _QueryGen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.nodes: list[str] = []  # visible node vars
        self.values: list[str] = []  # visible value vars
        self.rels: list[str] = []  # visible rel vars
        self.counter = 0

    def fresh(self, prefix):
        self.counter += 1
        return f"{prefix}{self.counter}"

    def node_pat(self, allow_bound=True):
        rng = self.rng
        if allow_bound and self.nodes and rng.random() < 0.35:
            var = rng.choice(self.nodes)
            return f"({var})", var
        var = self.fresh("n") if rng.random() < 0.85 else None
        labels = "".join(":" + l for l in rng.sample(LABELS, rng.choice([0, 0, 1, 1, 2])))
        props = ""
        if rng.random() < 0.2:
            key = rng.choice(["x", "s"])
            props = " {" + f"{key}: {self.typed_lit(key)}" + "}"
        return f"({var or ''}{labels}{props})", var

    def rel_pat(self):
        rng = self.rng
        var = self.fresh("r") if rng.random() < 0.5 else ""
        types = "|".join(rng.sample(TYPES, rng.choice([0, 1, 1, 2])))
        inner = var + (":" + types if types else "")
        body = f"[{inner}]" if inner or rng.random() < 0.5 else ""
        d = rng.choice(["->", "<-", "--"])
        if d == "->":
            return f"-{body}->", var
        if d == "<-":
            return f"<-{body}-", var
        return f"-{body}-", var

    def pattern(self):
        text, var = self.node_pat()
        new_nodes, new_rels = [var] if var else [], []
        for _ in range(self.rng.choice([0, 1, 1, 2])):
            r, rv = self.rel_pat()
            n, nv = self.node_pat()
            text += r + n
            if rv:
                new_rels.append(rv)
            if nv:
                new_nodes.append(nv)
        return text, new_nodes, new_rels

    def typed_lit(self, prop):
        rng = self.rng
        if rng.random() < 0.1:
            return _lit(rng)
        if prop == "s":
            return rng.choice(['"a"', '"b"', '"c"'])
        if prop == "y":
            return rng.choice(["0.5", "1", "2.5"])
        return rng.choice(["-1", "0", "1", "2"])

    def atom(self):
        rng = self.rng
        choices = ["lit"]
        if self.nodes:
            choices += ["prop", "prop", "var"]
        if self.rels:
            choices += ["relprop"]
        if self.values:
            choices += ["value"]
        kind = rng.choice(choices)
        if kind == "prop":
            return f"{rng.choice(self.nodes)}.{rng.choice(PROPS + ('f', 'tags'))}"
        if kind == "relprop":
            return f"{rng.choice(self.rels)}.w"
        if kind == "var":
            return rng.choice(self.nodes)
        if kind == "value":
            return rng.choice(self.values)
        return _lit(rng)

    def predicate(self, depth=0):
        rng = self.rng
        r = rng.random()
        if depth < 2 and r < 0.25:
            return f"{self.predicate(depth + 1)} {rng.choice(['AND', 'OR'])} {self.predicate(depth + 1)}"
        if depth < 2 and r < 0.35:
            return f"NOT {self.predicate(depth + 1)}"
        if depth < 2 and r < 0.42:
            return f"({self.predicate(depth + 1)})"
        if r < 0.55:
            items = ", ".join(_lit(rng) for _ in range(rng.randint(0, 3)))
            return f"{self.atom()} IN [{items}]"
        if self.nodes and rng.random() < 0.7:
            # mostly comparisons between matching kinds, so filters pass often enough
            prop = rng.choice(PROPS)
            return f"{rng.choice(self.nodes)}.{prop} {rng.choice(A.CMP_OPS)} {self.typed_lit(prop)}"
        return f"{self.atom()} {rng.choice(A.CMP_OPS)} {self.atom()}"

    def query(self) -> str:
        rng = self.rng
        parts = []
        for ci in range(rng.randint(1, 3)):
            if ci > 0 and rng.random() < 0.3 and self.nodes:
                keep = rng.sample(self.nodes, rng.randint(1, len(self.nodes)))
                items = list(keep)
                values = []
                if rng.random() < 0.5:
                    v = self.fresh("v")
                    items.append(f"{rng.choice(keep)}.{rng.choice(PROPS)} AS {v}")
                    values.append(v)
                self.nodes, self.values, self.rels = keep, values, []
                text = "WITH " + ", ".join(items)
                if rng.random() < 0.4:
                    text += " WHERE " + self.predicate()
                parts.append(text)
            optional = ci > 0 and rng.random() < 0.4
            pats, nn, nr = [], [], []
            for _ in range(rng.choice([1, 1, 2])):
                t, a, b = self.pattern()
                pats.append(t)
                nn += a
                nr += b
            self.nodes = list(dict.fromkeys(self.nodes + nn))
            self.rels = list(dict.fromkeys(self.rels + nr))
            text = ("OPTIONAL MATCH " if optional else "MATCH ") + ", ".join(pats)
            if rng.random() < 0.4:
                text += " WHERE " + self.predicate()
            parts.append(text)
        items = []
        for i in range(rng.randint(1, 3)):
            items.append(f"{self.atom()} AS c{i}")
        parts.append("RETURN " + ", ".join(items))
        if rng.random() < 0.5:
            keys = rng.sample([f"c{i}" for i in range(len(items))], rng.randint(1, len(items)))
            parts.append("ORDER BY " + ", ".join(
                k + rng.choice(["", " ASC", " DESC"]) for k in keys))
        return "\n".join(parts)


def random_query(rng: random.Random) -> str:
    return _QueryGen(rng).query()
