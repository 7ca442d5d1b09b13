"""Rough-set layer: information systems, approximations, discernibility and
rule induction.

Objects carry small integer symbols for every condition attribute plus one
decision attribute. The discernibility matrix holds, per object pair, the set
of attributes on which the pair differs; its CNF's prime implicants are the
minimal attribute sets (reducts) used to build decision rules.

Decision symbols are ordered integers (0 = lowest class), which makes the
highest-decision conflict policy in ``classify`` well defined.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import DataTable
from .som import Discretizer1D


@dataclass
class InformationSystem:
    conditions: np.ndarray  # (n_objects, n_attributes) int
    decisions: np.ndarray  # (n_objects,) int
    attribute_names: list[str] | None = None
    decision_name: str = "d"

    def __post_init__(self):
        self.conditions = np.asarray(self.conditions, dtype=np.int64)
        self.decisions = np.asarray(self.decisions, dtype=np.int64)
        if self.conditions.ndim != 2:
            raise ValueError("conditions must be 2-D")
        if self.decisions.shape != (self.conditions.shape[0],):
            raise ValueError("one decision per object required")
        if self.attribute_names is not None and len(self.attribute_names) != (
            self.conditions.shape[1]
        ):
            raise ValueError("one name per condition attribute required")

    @property
    def n_objects(self) -> int:
        return self.conditions.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.conditions.shape[1]


@dataclass
class DiscernibilityMatrix:
    """Symmetric matrix of per-pair differing-attribute sets; empty diagonal."""

    entries: list[list[frozenset[int]]]

    @property
    def n(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Rule:
    """Conjunction of (attribute == symbol) descriptors implying a decision."""

    descriptors: tuple[tuple[int, int], ...]  # sorted (attribute, symbol) pairs
    decision: int
    support: int

    def matches(self, obj) -> bool:
        return all(obj[a] == v for a, v in self.descriptors)

    def distance(self, obj) -> int:
        """Hamming distance between the descriptors and the object."""
        return sum(1 for a, v in self.descriptors if obj[a] != v)


@dataclass
class RuleSet:
    rules: list[Rule]
    n_attributes: int
    n_training_objects: int
    attribute_names: list[str] | None = None
    decision_name: str = "d"


def build_information_system(
    table: DataTable, discretizers: list[Discretizer1D]
) -> InformationSystem:
    """Discretize every column of a table (conditions first, decision last)."""
    if len(discretizers) != table.c + 1:
        raise ValueError(
            f"need {table.c + 1} discretizers (conditions + decision), "
            f"got {len(discretizers)}"
        )
    labels = np.column_stack(
        [d.labels(table.values[:, j]) for j, d in enumerate(discretizers)]
    )
    return InformationSystem(
        conditions=labels[:, :-1],
        decisions=labels[:, -1],
        attribute_names=list(table.names[:-1]),
        decision_name=table.decision_name,
    )


def indiscernibility(system: InformationSystem, attrs) -> list[list[int]]:
    """Equivalence classes of objects equal on every attribute in attrs.

    An empty attribute set yields the single all-objects block. Blocks are
    sorted by their smallest member.
    """
    attrs = sorted(attrs)
    for a in attrs:
        if not (0 <= a < system.n_attributes):
            raise ValueError(f"unknown attribute index {a}")
    if not attrs:
        return [list(range(system.n_objects))]
    groups: dict[tuple, list[int]] = {}
    for i, row in enumerate(system.conditions[:, attrs]):
        groups.setdefault(tuple(row), []).append(i)
    return sorted(groups.values(), key=lambda block: block[0])


def lower_upper(
    system: InformationSystem, attrs, concept
) -> tuple[set[int], set[int]]:
    """B-lower and B-upper approximations of a concept (a set of objects)."""
    concept = set(concept)
    lower: set[int] = set()
    upper: set[int] = set()
    for block in indiscernibility(system, attrs):
        block_set = set(block)
        if block_set <= concept:
            lower |= block_set
        if block_set & concept:
            upper |= block_set
    return lower, upper


def discernibility_matrix(
    system: InformationSystem, decision_relative: bool = False
) -> DiscernibilityMatrix:
    """Per-pair sets of attributes with differing symbols.

    In decision-relative mode, pairs with equal decisions get the empty set
    regardless of their condition symbols.
    """
    n = system.n_objects
    cond = system.conditions
    dec = system.decisions
    empty: frozenset[int] = frozenset()
    entries = [[empty] * n for _ in range(n)]
    for i in range(n):
        for j in range(i):
            if decision_relative and dec[i] == dec[j]:
                continue
            diff = np.nonzero(cond[i] != cond[j])[0]
            if diff.size:
                c_ij = frozenset(int(a) for a in diff)
                entries[i][j] = c_ij
                entries[j][i] = c_ij
    return DiscernibilityMatrix(entries)


def _absorb(clauses) -> list[frozenset[int]]:
    """Drop duplicate clauses and any clause that is a superset of another."""
    unique = sorted(set(clauses), key=lambda c: (len(c), sorted(c)))
    kept: list[frozenset[int]] = []
    for clause in unique:
        if not any(k <= clause for k in kept):
            kept.append(clause)
    return kept


def discernibility_function(matrix: DiscernibilityMatrix) -> list[frozenset[int]]:
    """CNF of the matrix: one clause per nonempty lower-triangle entry.

    Clauses are deduplicated and absorbed; an empty list is the constant-true
    function.
    """
    clauses = [
        matrix.entries[i][j]
        for i in range(matrix.n)
        for j in range(i)
        if matrix.entries[i][j]
    ]
    return _absorb(clauses)


def _cnf_attributes(cnf) -> set[int]:
    attrs: set[int] = set()
    for clause in cnf:
        attrs |= clause
    return attrs


def prime_implicants(
    cnf, max_attributes: int = 20
) -> list[frozenset[int]]:
    """Exact CNF -> DNF expansion; the implicants are the minimal hitting sets.

    The empty CNF (constant true) yields the single empty implicant. Results
    are sorted by size, then lexicographically. Instances over more than
    max_attributes attributes are refused; use greedy_cover for those.
    """
    attrs = _cnf_attributes(cnf)
    if len(attrs) > max_attributes:
        raise ValueError(
            f"CNF spans {len(attrs)} attributes (> {max_attributes}); "
            "exact expansion refused, use greedy_cover instead"
        )
    terms: list[frozenset[int]] = [frozenset()]
    for clause in _absorb(cnf):
        grown: set[frozenset[int]] = set()
        for term in terms:
            if term & clause:
                grown.add(term)
            else:
                for a in clause:
                    grown.add(term | {a})
        terms = _absorb(grown)
    return sorted(terms, key=lambda t: (len(t), sorted(t)))


def greedy_cover(cnf) -> frozenset[int]:
    """Greedy hitting set for large CNFs: not guaranteed minimal, always valid."""
    remaining = [set(clause) for clause in cnf if clause]
    chosen: set[int] = set()
    while remaining:
        counts: dict[int, int] = {}
        for clause in remaining:
            for a in clause:
                counts[a] = counts.get(a, 0) + 1
        best = min(
            counts, key=lambda a: (-counts[a], a)
        )  # most coverage, lowest index on ties
        chosen.add(best)
        remaining = [c for c in remaining if best not in c]
    # prune redundant picks, largest index first, for a deterministic result
    for a in sorted(chosen, reverse=True):
        trial = chosen - {a}
        if all(trial & set(c) for c in cnf if c):
            chosen = trial
    return frozenset(chosen)


def induce_rules(system: InformationSystem) -> RuleSet:
    """Object-local reducts instantiated as decision rules.

    For each object, the decision-relative discernibility clauses involving
    it are minimized; each prime implicant, filled with the object's symbols,
    becomes one rule for the object's decision. Duplicate rules merge with
    summed support. Contradictory rules (same descriptors, different
    decisions) are kept, preserving boundary-region ambiguity.
    """
    if system.n_objects < 1:
        raise ValueError("empty information system")
    matrix = discernibility_matrix(system, decision_relative=True)
    counts: dict[tuple[tuple[tuple[int, int], ...], int], int] = {}
    for i in range(system.n_objects):
        clauses = [matrix.entries[i][j] for j in range(matrix.n) if matrix.entries[i][j]]
        for implicant in prime_implicants(_absorb(clauses)):
            descriptors = tuple(
                sorted((a, int(system.conditions[i, a])) for a in implicant)
            )
            key = (descriptors, int(system.decisions[i]))
            counts[key] = counts.get(key, 0) + 1
    rules = [
        Rule(descriptors=k[0], decision=k[1], support=v) for k, v in counts.items()
    ]
    rules.sort(key=lambda r: (len(r.descriptors), r.descriptors, r.decision))
    return RuleSet(
        rules=rules,
        n_attributes=system.n_attributes,
        n_training_objects=system.n_objects,
        attribute_names=system.attribute_names,
        decision_name=system.decision_name,
    )


def classify(rules: RuleSet, obj) -> int:
    """Decision for a condition-symbol vector under the ambiguity policy.

    All matching rules vote; conflicting votes resolve to the highest
    decision symbol. With no match, the rules nearest in descriptor Hamming
    distance vote under the same policy.
    """
    if not rules.rules:
        raise ValueError("empty rule set")
    obj = np.asarray(obj, dtype=np.int64)
    if obj.shape != (rules.n_attributes,):
        raise ValueError(f"expected {rules.n_attributes} condition symbols")
    matched = [r.decision for r in rules.rules if r.matches(obj)]
    if matched:
        return max(matched)
    best = min(r.distance(obj) for r in rules.rules)
    return max(r.decision for r in rules.rules if r.distance(obj) == best)


def mean_square_error(predicted, actual) -> float:
    """sum((p - a)^2) / m over integer class labels."""
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape or predicted.size == 0:
        raise ValueError("prediction/target vectors must match and be non-empty")
    return float(np.mean((predicted - actual) ** 2))


def mse(rules: RuleSet, test: InformationSystem) -> float:
    """Mean squared class-label error of the rules over a test system."""
    if test.n_objects < 1:
        raise ValueError("empty test system")
    predicted = [classify(rules, test.conditions[i]) for i in range(test.n_objects)]
    return mean_square_error(predicted, test.decisions)


def _symbol_name(sym: int, n_symbols: int) -> str:
    if n_symbols == 2:
        return ("low", "high")[sym]
    if n_symbols == 3:
        return ("low", "middle", "high")[sym]
    return f"c{sym}"


def format_rules(rules: RuleSet) -> str:
    """Human-readable listing, one rule per line:
    ``a1=low AND a3=high => d=middle (support=7)``."""
    names = rules.attribute_names or [
        f"a{i + 1}" for i in range(rules.n_attributes)
    ]
    max_sym = max(
        [v for r in rules.rules for _, v in r.descriptors] + [r.decision for r in rules.rules],
        default=0,
    )
    n_symbols = max_sym + 1
    lines = []
    for r in rules.rules:
        if r.descriptors:
            lhs = " AND ".join(
                f"{names[a]}={_symbol_name(v, n_symbols)}" for a, v in r.descriptors
            )
        else:
            lhs = "TRUE"
        lines.append(
            f"{lhs} => {rules.decision_name}={_symbol_name(r.decision, n_symbols)}"
            f" (support={r.support})"
        )
    return "\n".join(lines) + "\n"


def format_rules_csv(rules: RuleSet) -> str:
    """CSV dump: descriptors as ``attr=symbol`` pairs joined by ';'."""
    lines = ["descriptors,decision,support"]
    for r in rules.rules:
        desc = ";".join(f"{a}={v}" for a, v in r.descriptors)
        lines.append(f"{desc},{r.decision},{r.support}")
    return "\n".join(lines) + "\n"
