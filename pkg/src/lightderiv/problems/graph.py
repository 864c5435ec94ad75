"""Single-source shortest paths as a lightest derivation problem."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..core import Problem, Registry, Rule, Statement


@dataclass
class Graph:
    n: int
    edges: list[tuple[int, int, float]] = field(default_factory=list)
    source: int = 0
    target: int = 0

    def __post_init__(self) -> None:
        for name, v in (("source", self.source), ("target", self.target)):
            if not 0 <= v < self.n:
                raise ValueError(f"{name} {v} is not a node of a {self.n}-node graph")
        for x, y, w in self.edges:
            if not (0 <= x < self.n and 0 <= y < self.n):
                raise ValueError(f"edge ({x}, {y}) references a missing node")
            if w < 0:
                raise ValueError(f"edge ({x}, {y}) has negative weight {w}")


def path(x: int) -> Statement:
    return Statement("path", (x,))


def graph_problem(g: Graph) -> Problem:
    """Axiom ``path(s) = 0`` plus ``path(x) ->w path(y)`` for each edge."""
    reg = Registry()
    rules = [Rule((), reg.register(path(g.source)), 0.0, tag="source")]
    for x, y, w in g.edges:
        rules.append(Rule((reg.register(path(x)),), reg.register(path(y)), float(w),
                          tag=f"edge {x}->{y}"))
    return Problem(goal=reg.register(path(g.target)), rules=rules, registry=reg,
                   name="shortest-path")


def load_graph(text: str) -> Graph:
    """Edge-list text: ``source s``, ``target t``, optional ``nodes n``, and
    one ``x y w`` line per edge; ``#`` starts a comment."""
    n = None
    source = target = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if line[0] in ("source", "target", "nodes"):
            if len(line) != 2:
                raise ValueError(f"line {lineno}: expected '{line[0]} <int>'")
            v = int(line[1])
            if line[0] == "source":
                source = v
            elif line[0] == "target":
                target = v
            else:
                n = v
            continue
        if len(line) != 3:
            raise ValueError(f"line {lineno}: expected 'x y w'")
        edges.append((int(line[0]), int(line[1]), float(line[2])))
    if source is None or target is None:
        raise ValueError("graph file needs 'source' and 'target' lines")
    if n is None:
        n = 1 + max([source, target] + [max(x, y) for x, y, _ in edges])
    return Graph(n, edges, source, target)


def dump_graph(g: Graph) -> str:
    lines = [f"nodes {g.n}", f"source {g.source}", f"target {g.target}"]
    lines += [f"{x} {y} {w!r}" for x, y, w in g.edges]
    return "\n".join(lines) + "\n"
