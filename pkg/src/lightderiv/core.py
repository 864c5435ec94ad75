"""Problem model for lightest derivation: statements, rules, derivations.

A problem is either *grounded* (an explicit, finite rule list) or *implicit*
(a list of axioms plus an expander that produces, for a newly weighted
statement, every rule instance it completes).
"""
from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator, NamedTuple, Sequence

DEFAULT_MAX_ARITY = 4
INF = math.inf


class LightestDerivationError(Exception):
    """Base class for errors raised by this package."""


class MalformedDerivationError(LightestDerivationError):
    pass


class BudgetExceededError(LightestDerivationError):
    def __init__(self, budget: int, frontier: int):
        super().__init__(
            f"statement budget {budget} exceeded (frontier size {frontier})"
        )
        self.budget = budget
        self.frontier = frontier


class Statement(NamedTuple):
    """A symbolic atom ``label(args...)``; args are integers only."""

    label: str
    args: tuple[int, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.label
        return f"{self.label}({','.join(map(str, self.args))})"


class Registry:
    """Dense, bijective statement interning."""

    def __init__(self) -> None:
        self._ids: dict[Statement, int] = {}
        self._statements: list[Statement] = []

    def intern(self, label: str, args: Iterable[int] = ()) -> Statement:
        return self.register(Statement(label, tuple(int(a) for a in args)))

    def register(self, s: Statement) -> Statement:
        if s not in self._ids:
            self._ids[s] = len(self._statements)
            self._statements.append(s)
        return s

    def id(self, s: Statement) -> int:
        return self._ids[s]

    def statement(self, i: int) -> Statement:
        return self._statements[i]

    def __contains__(self, s: object) -> bool:
        return s in self._ids

    def __len__(self) -> int:
        return len(self._statements)

    def __iter__(self) -> Iterator[Statement]:
        return iter(self._statements)


def intern(label: str, args: Iterable[int], registry: Registry) -> tuple[Statement, int]:
    """Intern ``label(args)`` and return the statement with its dense id."""
    if not label:
        raise ValueError("statement label must be non-empty")
    s = registry.intern(label, args)
    return s, registry.id(s)


class General:
    """A general (non-additive) weight function over antecedent weights.

    Callers are responsible for the function being non-decreasing in each
    argument; :func:`validate_problem` samples it.
    """

    __slots__ = ("fn",)

    def __init__(self, fn: Callable[[Sequence[float]], float]):
        self.fn = fn

    def __call__(self, ws: Sequence[float]) -> float:
        return self.fn(ws)

    def __repr__(self) -> str:
        return f"General({getattr(self.fn, '__name__', self.fn)!r})"


Weight = "float | General"


class Rule(NamedTuple):
    """``antecedents -> conclusion`` with an additive constant or a General fn.

    For additive rules ``weight`` is the rule weight v and the conclusion gets
    ``v + w1 + ... + wn``.  ``signed`` permits a negative additive weight.
    """

    antecedents: tuple
    conclusion: Hashable
    weight: float | General
    tag: str | None = None
    signed: bool = False

    @property
    def additive(self) -> bool:
        return not isinstance(self.weight, General)

    def __str__(self) -> str:
        ants = " ".join(map(str, self.antecedents))
        return f"{ants} ->[{self.weight}] {self.conclusion}".lstrip()


def apply_weight(weight: float | General, ws: Sequence[float]) -> float:
    """Evaluate a rule's weight function; additive sums left to right."""
    if isinstance(weight, General):
        return weight(ws)
    w = weight
    for x in ws:
        w += x
    return w


class Chart:
    """Read-only (to expanders) view of the statements weighted so far."""

    __slots__ = ("weights", "_by_label")

    def __init__(self) -> None:
        self.weights: dict = {}
        self._by_label: dict[str, list] = {}

    def add(self, s: Hashable, w: float) -> None:
        self.weights[s] = w
        label = getattr(s, "label", None)
        if label is not None:
            self._by_label.setdefault(label, []).append(s)

    def weight_of(self, s: Hashable) -> float | None:
        return self.weights.get(s)

    def scan(self, label: str, prefix: tuple[int, ...] = ()) -> list:
        """Weighted statements with ``label`` whose args start with ``prefix``."""
        items = self._by_label.get(label, [])
        if not prefix:
            return list(items)
        k = len(prefix)
        return [s for s in items if s.args[:k] == prefix]

    def __contains__(self, s: object) -> bool:
        return s in self.weights

    def __len__(self) -> int:
        return len(self.weights)


Expander = Callable[[Hashable], Iterable[Rule]]
ExpanderFactory = Callable[[Chart], Expander]


def grounded_expander(rules: Sequence[Rule]) -> ExpanderFactory:
    """Expander factory for an explicit rule list (indexes rules by antecedent)."""
    index: dict = {}
    for r in rules:
        for a in dict.fromkeys(r.antecedents):
            index.setdefault(a, []).append(r)

    def factory(chart: Chart) -> Expander:
        weights = chart.weights

        def expand(b):
            for r in index.get(b, ()):
                if all(a in weights for a in r.antecedents):
                    yield r

        return expand

    return factory


@dataclass
class Problem:
    """A lightest derivation problem ``(Sigma, R, goal)``.

    Grounded problems set ``rules``; implicit ones set ``axioms`` and
    ``expander``.  ``goal_offset`` is subtracted from the goal weight to
    report the problem's objective (used by equivalent re-weightings).
    """

    goal: Hashable
    rules: list[Rule] | None = None
    axioms: list[Rule] | None = None
    expander: ExpanderFactory | None = None
    registry: Registry | None = None
    name: str = ""
    goal_offset: float = 0.0
    max_arity: int = DEFAULT_MAX_ARITY
    _grounded_factory: ExpanderFactory | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.rules is None and (self.axioms is None or self.expander is None):
            raise ValueError("problem needs either rules or axioms + expander")

    @property
    def grounded(self) -> bool:
        return self.rules is not None

    def initial_rules(self) -> list[Rule]:
        if self.rules is not None:
            return [r for r in self.rules if not r.antecedents]
        return list(self.axioms)

    def make_expander(self, chart: Chart) -> Expander:
        if self.rules is not None:
            if self._grounded_factory is None:
                self._grounded_factory = grounded_expander(self.rules)
            return self._grounded_factory(chart)
        return self.expander(chart)

    def statements(self) -> list:
        """All statements mentioned by a grounded problem, in first-seen order."""
        if self.rules is None:
            raise ValueError("statements() needs a grounded problem")
        seen: dict = {}
        for r in self.rules:
            for a in r.antecedents:
                seen.setdefault(a, None)
            seen.setdefault(r.conclusion, None)
        seen.setdefault(self.goal, None)
        return list(seen)


@dataclass
class Derivation:
    rule: Rule
    children: list["Derivation"]
    weight: float

    def statements(self) -> Iterator:
        yield self.rule.conclusion
        for c in self.children:
            yield from c.statements()

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


def eval_derivation(d: Derivation) -> float:
    """Weight of a derivation tree, evaluated bottom-up."""
    r = d.rule
    if len(d.children) != len(r.antecedents):
        raise MalformedDerivationError(
            f"rule {r} has {len(r.antecedents)} antecedents, "
            f"derivation has {len(d.children)} children"
        )
    ws = []
    for ant, child in zip(r.antecedents, d.children):
        if child.rule.conclusion != ant:
            raise MalformedDerivationError(
                f"child derives {child.rule.conclusion}, expected {ant}"
            )
        ws.append(eval_derivation(child))
    return apply_weight(r.weight, ws)


@dataclass
class Violation:
    kind: str
    rule: Rule
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.rule} ({self.detail})"


def _check_rule(r: Rule, max_arity: int, rng: random.Random, samples: int) -> list[Violation]:
    out = []
    n = len(r.antecedents)
    if n > max_arity:
        out.append(Violation("arity", r, f"{n} > {max_arity}"))
    if not isinstance(r.weight, General):
        if r.weight < 0 and not r.signed:
            out.append(Violation("negative-weight", r, f"v = {r.weight}"))
        return out
    if n == 0:
        return out
    for _ in range(samples):
        ws = [rng.uniform(0.0, 100.0) for _ in range(n)]
        i = rng.randrange(n)
        bumped = list(ws)
        bumped[i] += rng.uniform(0.0, 10.0)
        lo, hi = r.weight(ws), r.weight(bumped)
        if hi < lo:
            out.append(
                Violation("decreasing", r, f"raising w{i} {ws[i]:.3g}->{bumped[i]:.3g} "
                          f"lowered g {lo:.6g}->{hi:.6g}")
            )
            break
    return out


def validate_problem(p: Problem, samples: int = 16, seed: int = 0,
                     rule_budget: int = 10_000) -> list[Violation]:
    """Report arity, negative-weight and monotonicity problems (never raises).

    Implicit problems are validated on the rules met during a bounded
    forward closure.
    """
    rng = random.Random(seed)
    rules = p.rules if p.grounded else list(_closure_rules(p, rule_budget))
    report = []
    for r in rules:
        report.extend(_check_rule(r, p.max_arity, rng, samples))
    return report


def _closure_rules(p: Problem, rule_budget: int) -> Iterator[Rule]:
    """Rules met by a weight-blind forward closure, capped at ``rule_budget``."""
    chart = Chart()
    expand = p.make_expander(chart)
    queue = list(p.initial_rules())
    count = 0
    while queue and count < rule_budget:
        r = queue.pop()
        count += 1
        yield r
        c = r.conclusion
        if c in chart:
            continue
        chart.add(c, 0.0)
        queue.extend(expand(c))


def ground(p: Problem, statement_budget: int = 1_000_000) -> Problem:
    """Materialize every rule instance reachable from the axioms."""
    if p.grounded:
        return p
    chart = Chart()
    expand = p.make_expander(chart)
    rules: list[Rule] = list(p.initial_rules())
    frontier = [r.conclusion for r in rules]
    while frontier:
        nxt = []
        for c in frontier:
            if c in chart:
                continue
            if len(chart) >= statement_budget:
                raise BudgetExceededError(statement_budget, len(frontier))
            chart.add(c, 0.0)
            for r in expand(c):
                rules.append(r)
                nxt.append(r.conclusion)
        frontier = nxt
    return Problem(goal=p.goal, rules=rules, registry=p.registry, name=p.name,
                   goal_offset=p.goal_offset, max_arity=p.max_arity)


# -- text serialization --------------------------------------------------

_STMT_RE = re.compile(r"^([^\s(),]+)(?:\(([-\d,\s]*)\))?$")


def parse_statement(text: str) -> Statement:
    m = _STMT_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad statement {text!r}")
    label, args = m.group(1), m.group(2)
    if args is None or not args.strip():
        return Statement(label, ())
    return Statement(label, tuple(int(a) for a in args.split(",")))


def dump_problem(p: Problem) -> str:
    """Serialize a grounded additive problem as ``rule <w> <concl> <- <ants>``."""
    if not p.grounded:
        raise ValueError("only grounded problems can be serialized")
    lines = [f"goal {p.goal}"]
    for r in p.rules:
        if isinstance(r.weight, General):
            raise ValueError(f"cannot serialize general weight in {r}")
        head = "srule" if r.signed else "rule"
        ants = " ".join(str(a) for a in r.antecedents)
        lines.append(f"{head} {r.weight!r} {r.conclusion} <- {ants}".rstrip())
    return "\n".join(lines) + "\n"


def load_problem(text: str, name: str = "") -> Problem:
    registry = Registry()
    goal = None
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "goal":
            goal = registry.register(parse_statement(rest))
        elif head in ("rule", "srule"):
            w_text, _, rest = rest.strip().partition(" ")
            concl_text, sep, ants_text = rest.partition("<-")
            if not sep:
                raise ValueError(f"line {lineno}: missing '<-'")
            concl = registry.register(parse_statement(concl_text))
            ants = tuple(registry.register(parse_statement(a)) for a in ants_text.split())
            rules.append(Rule(ants, concl, float(w_text), signed=head == "srule"))
        else:
            raise ValueError(f"line {lineno}: unknown directive {head!r}")
    if goal is None:
        raise ValueError("problem text has no goal line")
    return Problem(goal=goal, rules=rules, registry=registry, name=name)
