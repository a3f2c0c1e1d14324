"""Domain types shared by every allocation engine.

Money lives in integer minor units (cents/Rappen). Engines compute in exact
rationals (see :mod:`kes.rational`) and only round when receipts are emitted,
per funded project, with a largest-remainder scheme so each project's rounded
receipts sum exactly to its cost.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .rational import Rat, ZERO, floor_to_int, from_decimal_str, rat_str


class ValidationError(Exception):
    """Instance or configuration violates a model rule."""


class DuplicateIdError(ValidationError):
    pass


class UnknownReferenceError(ValidationError):
    pass


class NonPositiveCostError(ValidationError):
    pass


class WeightSumZeroError(ValidationError):
    pass


@dataclass(frozen=True, order=True)
class Money:
    """An amount in minor currency units. Never negative."""

    cents: int

    def __post_init__(self) -> None:
        if not isinstance(self.cents, int):
            raise ValidationError(f"money must be an integer cent count, got {self.cents!r}")
        if self.cents < 0:
            raise ValidationError(f"money cannot be negative: {self.cents}")

    @classmethod
    def from_str(cls, text: str) -> "Money":
        """Parse a decimal amount with at most two fraction digits."""
        text = text.strip()
        if text.startswith("-"):
            raise ValidationError(f"money cannot be negative: {text!r}")
        whole, dot, frac = text.partition(".")
        if not whole and not frac:
            raise ValidationError(f"not a money amount: {text!r}")
        if dot and len(frac) > 2:
            raise ValidationError(f"more than two fraction digits: {text!r}")
        digits = (whole or "0") + (frac.ljust(2, "0") if dot else "00")
        if not digits.isdigit():
            raise ValidationError(f"not a money amount: {text!r}")
        return cls(int(digits))

    def __str__(self) -> str:
        return f"{self.cents // 100}.{self.cents % 100:02d}"

    def __add__(self, other: "Money") -> "Money":
        return Money(self.cents + other.cents)


class AgentKind(str, enum.Enum):
    INDIVIDUAL = "individual"
    FIELD = "field"


class Normalization(str, enum.Enum):
    SUM_SHARE = "sum-share"
    MAX_SCALE = "max-scale"


TIE_BREAK_POLICY = "lowest-cost-then-id"


@dataclass(frozen=True)
class Project:
    """A fundable proposal. ``annotations`` maps field-id -> tag count."""

    id: str
    name: str
    cost: Money
    annotations: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.cost.cents <= 0:
            raise NonPositiveCostError(f"project {self.id!r} must have a strictly positive cost")
        for fid, count in self.annotations.items():
            if count < 0:
                raise ValidationError(f"project {self.id!r}: negative tag count for field {fid!r}")


@dataclass(frozen=True)
class Agent:
    """An individual voter or a weighted impact-field agent."""

    id: str
    kind: AgentKind
    weight: object = None  # exact rational, field agents only

    @classmethod
    def individual(cls, agent_id: str) -> "Agent":
        return cls(agent_id, AgentKind.INDIVIDUAL)

    @classmethod
    def field(cls, agent_id: str, weight) -> "Agent":
        w = Rat(weight) if not isinstance(weight, type(ZERO)) else weight
        if w < 0:
            raise ValidationError(f"field {agent_id!r} has negative weight")
        return cls(agent_id, AgentKind.FIELD, w)


class BallotSet:
    """Raw non-negative point assignments; absent entries mean zero."""

    def __init__(self, points: Mapping[str, Mapping[str, object]] | None = None):
        self._points: dict[str, dict[str, object]] = {}
        for agent_id, row in (points or {}).items():
            for project_id, value in row.items():
                self.set(agent_id, project_id, value)

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[str, str, object]]) -> "BallotSet":
        ballots = cls()
        for agent_id, project_id, value in entries:
            ballots.set(agent_id, project_id, value)
        return ballots

    def set(self, agent_id: str, project_id: str, value) -> None:
        value = value if isinstance(value, type(ZERO)) else Rat(value)
        if value < 0:
            raise ValidationError(
                f"negative points from {agent_id!r} for {project_id!r}: {rat_str(value)}"
            )
        self._points.setdefault(agent_id, {})[project_id] = value

    def get(self, agent_id: str, project_id: str):
        return self._points.get(agent_id, {}).get(project_id, ZERO)

    def row(self, agent_id: str) -> dict[str, object]:
        return dict(self._points.get(agent_id, {}))

    def agent_ids(self) -> list[str]:
        return list(self._points)

    def entries(self) -> Iterable[tuple[str, str, object]]:
        for agent_id, row in self._points.items():
            for project_id, value in row.items():
                yield agent_id, project_id, value


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one allocation scenario."""

    total_budget: Money
    split_r: object = ZERO  # fraction of the budget endowed to impact fields
    field_weights: Mapping[str, object] = field(default_factory=dict)
    normalization: Normalization = Normalization.SUM_SHARE
    tie_break: str = TIE_BREAK_POLICY
    points_preweighted: bool = True

    def __post_init__(self) -> None:
        r = self.split_r if isinstance(self.split_r, type(ZERO)) else Rat(self.split_r)
        object.__setattr__(self, "split_r", r)
        if r < 0 or r > 1:
            raise ValidationError(f"split_r must lie in [0,1], got {rat_str(r)}")
        weights = {}
        for fid, w in self.field_weights.items():
            w = w if isinstance(w, type(ZERO)) else Rat(w)
            if w < 0:
                raise ValidationError(f"negative weight for field {fid!r}")
            weights[fid] = w
        object.__setattr__(self, "field_weights", weights)


def normalize_utilities(
    ballots: BallotSet, mode: Normalization
) -> dict[str, dict[str, object]]:
    """Scale each agent's points into [0,1].

    Sum-share divides by the agent's point total (shares sum to 1);
    max-scale divides by the agent's maximum. All-zero agents stay all-zero.
    """
    normalized: dict[str, dict[str, object]] = {}
    for agent_id in ballots.agent_ids():
        row = ballots.row(agent_id)
        if mode is Normalization.SUM_SHARE:
            denom = sum(row.values(), ZERO)
        else:
            denom = max(row.values(), default=ZERO)
        if denom == 0:
            normalized[agent_id] = {pid: ZERO for pid in row}
        else:
            normalized[agent_id] = {pid: value / denom for pid, value in row.items()}
    return normalized


@dataclass(frozen=True)
class RoundRecord:
    """One funding round: what was bought, at what support, who paid what."""

    index: int
    selected: str
    support: object  # exact rational
    payments: Mapping[str, object]  # agent-id -> exact rational cents
    price: object = None  # MES only: the q at which the project was bought


@dataclass(frozen=True)
class AllocationResult:
    """Funded order, cent-rounded receipts, exact leftovers, and round log."""

    rule: str
    funded: tuple[str, ...]
    receipts: Mapping[tuple[str, str], Money]
    leftover: Mapping[str, object]  # agent-id -> exact rational cents
    rounds: tuple[RoundRecord, ...]

    def exact_payments(self, agent_id: str) -> dict[str, object]:
        """Exact per-project payments of one agent, in funding order."""
        out: dict[str, object] = {}
        for record in self.rounds:
            paid = record.payments.get(agent_id)
            if paid is not None and paid > 0:
                out[record.selected] = paid
        return out

    def total_exact_spend(self, agent_id: str):
        return sum(self.exact_payments(agent_id).values(), ZERO)


@dataclass(frozen=True)
class ValidatedInstance:
    """Cross-checked projects, agents, ballots, and derived endowments.

    Immutable after construction; engines only read it. Field-agent weights on
    the ``Agent`` objects are authoritative; ``config.field_weights`` is the
    assembly-time source and must not name unknown agents.
    """

    projects: tuple[Project, ...]
    agents: tuple[Agent, ...]
    ballots: BallotSet
    config: ScenarioConfig
    normalized: Mapping[str, Mapping[str, object]]
    initial_buckets: Mapping[str, object]
    project_by_id: Mapping[str, Project]
    agent_by_id: Mapping[str, Agent]
    supporters: Mapping[str, tuple[str, ...]]  # project-id -> agents with positive share

    @property
    def individuals(self) -> tuple[Agent, ...]:
        return tuple(a for a in self.agents if a.kind is AgentKind.INDIVIDUAL)

    @property
    def field_agents(self) -> tuple[Agent, ...]:
        return tuple(a for a in self.agents if a.kind is AgentKind.FIELD)

    def normalized_utility(self, agent_id: str, project_id: str):
        return self.normalized.get(agent_id, {}).get(project_id, ZERO)


def build_instance(
    projects: list[Project],
    agents: list[Agent],
    ballots: BallotSet,
    config: ScenarioConfig,
) -> ValidatedInstance:
    """Resolve cross-references and endow every agent with its bucket.

    Individuals each get ``(1-r)*B / |individuals|``; field agents get
    ``r*B * w_f / sum(w)``. Buckets are exact rationals in cents and always
    sum to B.
    """
    if not projects:
        raise ValidationError("instance needs at least one project")
    if not agents:
        raise ValidationError("instance needs at least one agent")

    project_by_id: dict[str, Project] = {}
    for project in projects:
        if project.id in project_by_id:
            raise DuplicateIdError(f"duplicate project id {project.id!r}")
        project_by_id[project.id] = project

    agent_by_id: dict[str, Agent] = {}
    for agent in agents:
        if agent.id in agent_by_id or agent.id in project_by_id:
            raise DuplicateIdError(f"duplicate agent id {agent.id!r}")
        if agent.kind is AgentKind.FIELD and agent.weight is None:
            raise ValidationError(f"field agent {agent.id!r} needs a weight")
        agent_by_id[agent.id] = agent

    for agent_id, project_id, _ in ballots.entries():
        if agent_id not in agent_by_id:
            raise UnknownReferenceError(f"ballot from unknown agent {agent_id!r}")
        if project_id not in project_by_id:
            raise UnknownReferenceError(f"ballot for unknown project {project_id!r}")
    for fid in config.field_weights:
        if fid not in agent_by_id or agent_by_id[fid].kind is not AgentKind.FIELD:
            raise UnknownReferenceError(f"configured weight for unknown field {fid!r}")

    individuals = [a for a in agents if a.kind is AgentKind.INDIVIDUAL]
    fields = [a for a in agents if a.kind is AgentKind.FIELD]

    budget = Rat(config.total_budget.cents)
    r = config.split_r
    individual_pot = (1 - r) * budget
    field_pot = r * budget

    if individual_pot > 0 and not individuals:
        raise ValidationError("split_r < 1 allocates budget to individuals, but none exist")
    if field_pot > 0 and not fields:
        raise ValidationError("split_r > 0 allocates budget to impact fields, but none exist")

    weight_sum = sum((a.weight for a in fields), ZERO) if fields else ZERO
    if fields and field_pot > 0 and weight_sum == 0:
        raise WeightSumZeroError("impact fields exist and split_r > 0, but weights sum to zero")

    buckets: dict[str, object] = {}
    for agent in agents:
        if agent.kind is AgentKind.INDIVIDUAL:
            buckets[agent.id] = individual_pot / len(individuals) if individuals else ZERO
        else:
            if weight_sum > 0:
                buckets[agent.id] = field_pot * agent.weight / weight_sum
            else:
                buckets[agent.id] = ZERO

    normalized = normalize_utilities(ballots, config.normalization)

    supporters: dict[str, tuple[str, ...]] = {}
    for project in projects:
        backers = [
            agent.id
            for agent in agents
            if normalized.get(agent.id, {}).get(project.id, ZERO) > 0
        ]
        supporters[project.id] = tuple(backers)

    return ValidatedInstance(
        projects=tuple(projects),
        agents=tuple(agents),
        ballots=ballots,
        config=config,
        normalized=normalized,
        initial_buckets=buckets,
        project_by_id=project_by_id,
        agent_by_id=agent_by_id,
        supporters=supporters,
    )


def allocate_cents(total_cents: int, exact_shares: Mapping[str, object]) -> dict[str, int]:
    """Round exact shares (summing to ``total_cents``) to integer cents.

    Largest-remainder: floor everything, then hand the missing cents to the
    largest fractional parts, ties to the lexicographically smaller id. The
    returned values sum to ``total_cents`` exactly.
    """
    floors: dict[str, int] = {}
    remainders: list[tuple[object, str]] = []
    for agent_id, share in exact_shares.items():
        low = floor_to_int(share)
        floors[agent_id] = low
        remainders.append((share - low, agent_id))
    missing = total_cents - sum(floors.values())
    remainders.sort(key=lambda item: (-item[0], item[1]))
    for frac, agent_id in remainders[:missing]:
        floors[agent_id] += 1
    return floors


def parse_rat(text: str):
    """Inverse of :func:`kes.rational.rat_str`, also accepting decimals."""
    return from_decimal_str(text)
