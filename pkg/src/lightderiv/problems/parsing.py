"""Weighted CNF grammar parsing as an implicit lightest derivation problem."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..core import Chart, Problem, Rule, Statement


class InputError(ValueError):
    pass


@dataclass
class Grammar:
    """A weighted grammar in Chomsky normal form."""

    start: str
    binary: list[tuple[str, str, str, float]] = field(default_factory=list)
    lexical: list[tuple[str, str, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        for prod in self.binary:
            if prod[3] < 0:
                raise ValueError(f"negative weight on {prod}")
        for prod in self.lexical:
            if prod[2] < 0:
                raise ValueError(f"negative weight on {prod}")

    @property
    def nonterminals(self) -> list[str]:
        seen = {self.start: None}
        for x, y, z, _ in self.binary:
            seen.update(dict.fromkeys((x, y, z)))
        for x, _, _ in self.lexical:
            seen.setdefault(x, None)
        return list(seen)

    @property
    def terminals(self) -> set[str]:
        return {s for _, s, _ in self.lexical}

    def symbol_id(self, x: str) -> int:
        return self.nonterminals.index(x)


def phrase(x: int, i: int, k: int) -> Statement:
    return Statement("phrase", (x, i, k))


def parse_problem(g: Grammar, tokens: list[str]) -> Problem:
    """Lexical axioms ``phrase(X,i,i+1)`` plus binary composition.

    The expander keeps two midpoint tables of expanded phrases, keyed by
    end position and by start position, so a new phrase only meets phrases
    that share its boundary.
    """
    terminals = g.terminals
    for t in tokens:
        if t not in terminals:
            raise InputError(f"unknown terminal {t!r}")
    ids = {x: j for j, x in enumerate(g.nonterminals)}
    n = len(tokens)
    axioms = []
    for i, tok in enumerate(tokens, 1):
        for x, s, w in g.lexical:
            if s == tok:
                axioms.append(Rule((), phrase(ids[x], i, i + 1), float(w),
                                   tag=f"{x}->'{s}'"))
    by_children: dict[tuple[int, int], list[tuple[int, float, str]]] = {}
    for x, y, z, w in g.binary:
        by_children.setdefault((ids[y], ids[z]), []).append(
            (ids[x], float(w), f"{x}->{y} {z}"))
    as_left = {y for y, _ in by_children}
    as_right = {z for _, z in by_children}

    def factory(chart: Chart):
        ending_at: dict[int, list[tuple[int, int]]] = {}
        starting_at: dict[int, list[tuple[int, int]]] = {}

        def expand(b: Statement):
            y, i, j = b.args
            out = []
            if y in as_left:
                for z, k in starting_at.get(j, ()):
                    for x, w, tag in by_children.get((y, z), ()):
                        out.append(Rule((b, phrase(z, j, k)), phrase(x, i, k), w, tag))
            if y in as_right:
                for l, h in ending_at.get(i, ()):
                    for x, w, tag in by_children.get((l, y), ()):
                        out.append(Rule((phrase(l, h, i), b), phrase(x, h, j), w, tag))
            ending_at.setdefault(j, []).append((y, i))
            starting_at.setdefault(i, []).append((y, j))
            return out

        return expand

    return Problem(goal=phrase(ids[g.start], 1, n + 1), axioms=axioms,
                   expander=factory, name="parse")


_BIN = re.compile(r"^(\S+)\s*->\s*(\S+)\s+(\S+)\s*:\s*(\S+)$")
_LEX = re.compile(r"^(\S+)\s*->\s*'([^']*)'\s*:\s*(\S+)$")


def load_grammar(text: str) -> Grammar:
    """Lines ``X -> Y Z : w`` and ``X -> 'tok' : w``; ``start X`` optional
    (defaults to the first left-hand side)."""
    start = None
    first = None
    binary, lexical = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("start "):
            start = line.split()[1]
            continue
        m = _LEX.match(line)
        if m:
            lexical.append((m.group(1), m.group(2), float(m.group(3))))
            first = first or m.group(1)
            continue
        m = _BIN.match(line)
        if m:
            binary.append((m.group(1), m.group(2), m.group(3), float(m.group(4))))
            first = first or m.group(1)
            continue
        raise ValueError(f"line {lineno}: cannot parse production {line!r}")
    start = start or first
    if start is None:
        raise ValueError("empty grammar")
    return Grammar(start, binary, lexical)


def cky(g: Grammar, tokens: list[str]) -> dict[tuple[str, int, int], float]:
    """Exhaustive min-weight CKY chart keyed by (X, i, k), 1-indexed."""
    n = len(tokens)
    best: dict[tuple[str, int, int], float] = {}
    for i, tok in enumerate(tokens, 1):
        for x, s, w in g.lexical:
            if s == tok and w < best.get((x, i, i + 1), float("inf")):
                best[(x, i, i + 1)] = w
    for span in range(2, n + 1):
        for i in range(1, n - span + 2):
            k = i + span
            for j in range(i + 1, k):
                for x, y, z, w in g.binary:
                    a = best.get((y, i, j))
                    b = best.get((z, j, k))
                    if a is None or b is None:
                        continue
                    v = w + a + b
                    if v < best.get((x, i, k), float("inf")):
                        best[(x, i, k)] = v
    return best
