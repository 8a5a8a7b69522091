"""Privacy-loss accounting for a release plan.

Epsilons are carried as decimal.Decimal so published totals are exact:
two charges of 0.1 report as exactly 0.2, never as float dust. Query
plans are trees. Leaves carry a query label and an epsilon; internal
nodes combine children either sequentially (costs add) or in parallel
over disjoint slices of the data (cost is the worst child).

Whether parallel branches really touch disjoint data is a property of
the data, not of the plan, so it cannot be verified here. The validator
enforces the structural declaration only: the leaf labels reachable from
distinct children of a parallel node must not overlap.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union


class PlanError(ValueError):
    """A query plan or epsilon value is malformed."""


class BudgetExceededError(RuntimeError):
    """A charge would push spent privacy loss past the budget."""

    def __init__(self, requested: Decimal, remaining: Decimal) -> None:
        self.requested = requested
        self.remaining = remaining
        super().__init__(f"charge of {requested} exceeds remaining budget {remaining}")


EpsilonLike = Union[Decimal, str, int, float]


def as_epsilon(value: EpsilonLike) -> Decimal:
    """Exact positive decimal epsilon.

    Floats are converted through repr, so the float 0.1 means the decimal
    0.1 rather than its binary expansion.
    """
    try:
        if isinstance(value, Decimal):
            eps = value
        elif isinstance(value, float):
            eps = Decimal(repr(value))
        elif isinstance(value, (str, int)):
            eps = Decimal(value)
        else:
            raise PlanError(f"cannot interpret {value!r} as an epsilon")
    except InvalidOperation as exc:
        raise PlanError(f"cannot interpret {value!r} as an epsilon") from exc
    if not eps.is_finite() or eps <= 0:
        raise PlanError(f"epsilon must be a positive finite decimal, got {value!r}")
    return eps


@dataclass(frozen=True)
class Query:
    """Leaf of a plan: one differentially private query and its cost."""

    label: str
    epsilon: Decimal

    def __post_init__(self) -> None:
        if not self.label:
            raise PlanError("query label must be a non-empty string")
        object.__setattr__(self, "epsilon", as_epsilon(self.epsilon))


@dataclass(frozen=True)
class Sequential:
    """Children run against the same data: privacy costs add."""

    children: tuple["QueryPlan", ...]


@dataclass(frozen=True)
class Parallel:
    """Children run against disjoint data slices: cost is the maximum."""

    children: tuple["QueryPlan", ...]


QueryPlan = Union[Query, Sequential, Parallel]


def seq(*children: QueryPlan) -> Sequential:
    return Sequential(tuple(children))


def par(*children: QueryPlan) -> Parallel:
    return Parallel(tuple(children))


def _leaf_labels(plan: QueryPlan) -> Iterator[str]:
    if isinstance(plan, Query):
        yield plan.label
    else:
        for child in plan.children:
            yield from _leaf_labels(child)


def validate_plan(plan: QueryPlan) -> None:
    """Reject empty composite nodes and overlapping parallel branches."""
    if isinstance(plan, Query):
        return
    if not isinstance(plan, (Sequential, Parallel)):
        raise PlanError(f"not a query plan node: {plan!r}")
    if not plan.children:
        raise PlanError("composite plan nodes need at least one child")
    if isinstance(plan, Parallel):
        seen: set[str] = set()
        for child in plan.children:
            labels = set(_leaf_labels(child))
            overlap = seen & labels
            if overlap:
                raise PlanError(
                    f"parallel branches must cover disjoint data; label(s) {sorted(overlap)} appear in more than one branch"
                )
            seen |= labels
    for child in plan.children:
        validate_plan(child)


def sequential_compose(epsilons: Iterable[EpsilonLike]) -> Decimal:
    """Total cost of queries over the same data: the sum."""
    values = [as_epsilon(e) for e in epsilons]
    if not values:
        raise PlanError("sequential composition of an empty list is undefined")
    return sum(values, Decimal(0))


def parallel_compose(epsilons: Iterable[EpsilonLike]) -> Decimal:
    """Total cost of queries over disjoint data: the maximum."""
    values = [as_epsilon(e) for e in epsilons]
    if not values:
        raise PlanError("parallel composition of an empty list is undefined")
    return max(values)


def total_epsilon(plan: QueryPlan, *, validate: bool = True) -> Decimal:
    """Fold a plan tree into its exact total privacy cost."""
    if validate:
        validate_plan(plan)
    if isinstance(plan, Query):
        return plan.epsilon
    if isinstance(plan, Sequential):
        return sequential_compose(total_epsilon(c, validate=False) for c in plan.children)
    if isinstance(plan, Parallel):
        return parallel_compose(total_epsilon(c, validate=False) for c in plan.children)
    raise PlanError(f"not a query plan node: {plan!r}")


def describe_plan(plan: QueryPlan) -> str:
    """Compact one-line rendering, e.g. SEQ(PAR(a:0.1,b:0.1),c:0.05)."""
    if isinstance(plan, Query):
        return f"{plan.label}:{plan.epsilon}"
    tag = "SEQ" if isinstance(plan, Sequential) else "PAR"
    return f"{tag}({','.join(describe_plan(c) for c in plan.children)})"


@dataclass(frozen=True)
class LedgerEntry:
    """One accepted charge: when, what for, and how much epsilon."""

    timestamp: str
    description: str
    epsilon: Decimal

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", as_epsilon(self.epsilon))
        for field_name in ("timestamp", "description"):
            value = getattr(self, field_name)
            if "\t" in value or "\n" in value or "\r" in value:
                raise PlanError(f"ledger {field_name} must not contain tabs or newlines: {value!r}")


class BudgetLedger:
    """Append-only record of privacy charges against a fixed budget.

    spent is always the exact decimal sum over entries, and a charge that
    would exceed the budget is rejected without touching the ledger.
    Single-writer: callers serialize concurrent charges.
    """

    def __init__(self, budget: EpsilonLike, entries: Iterable[LedgerEntry] = ()) -> None:
        self.budget = as_epsilon(budget)
        self.entries: list[LedgerEntry] = list(entries)
        if self.spent > self.budget:
            raise BudgetExceededError(self.spent, self.budget - self.spent)

    @property
    def spent(self) -> Decimal:
        return sum((entry.epsilon for entry in self.entries), Decimal(0))

    @property
    def remaining(self) -> Decimal:
        return self.budget - self.spent

    def charge(
        self,
        plan: QueryPlan,
        *,
        description: str | None = None,
        timestamp: str | None = None,
    ) -> LedgerEntry:
        """Charge a plan's total cost; atomic, rejects instead of overspending."""
        cost = total_epsilon(plan)
        if self.spent + cost > self.budget:
            raise BudgetExceededError(cost, self.remaining)
        entry = LedgerEntry(
            timestamp=timestamp if timestamp is not None else datetime.now(timezone.utc).isoformat(),
            description=description if description is not None else describe_plan(plan),
            epsilon=cost,
        )
        self.entries.append(entry)
        return entry


def charge(
    ledger: BudgetLedger,
    plan: QueryPlan,
    *,
    description: str | None = None,
    timestamp: str | None = None,
) -> BudgetLedger:
    """Module-level convenience wrapper around BudgetLedger.charge."""
    ledger.charge(plan, description=description, timestamp=timestamp)
    return ledger


def append_journal(path: str | Path, entry: LedgerEntry) -> None:
    """Append one charge to a plain-text journal: timestamp TAB description TAB epsilon."""
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(f"{entry.timestamp}\t{entry.description}\t{entry.epsilon}\n")


def load_journal(path: str | Path) -> list[LedgerEntry]:
    """Parse a journal written by append_journal; malformed lines name their line number."""
    entries: list[LedgerEntry] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise PlanError(f"{path}: line {lineno}: expected 3 tab-separated fields, got {len(parts)}")
            timestamp, description, eps_text = parts
            try:
                entries.append(LedgerEntry(timestamp, description, as_epsilon(eps_text)))
            except PlanError as exc:
                raise PlanError(f"{path}: line {lineno}: {exc}") from exc
    return entries


def load_ledger(path: str | Path, budget: EpsilonLike) -> BudgetLedger:
    """Rebuild a ledger from its journal, enforcing spent <= budget."""
    return BudgetLedger(budget, load_journal(path))
