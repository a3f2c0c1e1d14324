"""Classic Method of Equal Shares and greedy counterfactuals.

MES endows every individual with B/n and buys the project that becomes
affordable at the lowest uniform price q per unit of utility, where
cost = sum(min(q * u_i, b_i)). Prices are exact non-negative rationals.
The greedy rules walk a points ranking and spend a single pooled budget.
"""

from __future__ import annotations

import enum
from typing import Mapping

from .model import (
    AgentKind,
    AllocationResult,
    Money,
    RoundRecord,
    ValidatedInstance,
    allocate_cents,
)
from .rational import Rat, ZERO


class GreedyChannel(str, enum.Enum):
    INDIVIDUAL = "individual"
    GROUP = "group"


POOLED_AGENT_ID = "pooled-budget"


def min_q_affordable(cost: Money, utilities: Mapping[str, object], buckets: Mapping[str, object]):
    """Smallest q with sum(min(q*u_i, b_i)) == cost, or None if unaffordable.

    Exact solve over the piecewise-linear breakpoints q = b_i/u_i: walk the
    segments in ascending breakpoint order, capping one supporter at a time,
    until the linear solve lands inside the current segment.
    """
    supporters = [
        (agent_id, utilities[agent_id], buckets[agent_id])
        for agent_id in utilities
        if utilities[agent_id] > 0
    ]
    target = Rat(cost.cents)
    if not supporters:
        return None
    if sum((b for _, _, b in supporters), ZERO) < target:
        return None

    supporters.sort(key=lambda item: item[2] / item[1])  # by breakpoint b/u
    capped = ZERO
    active_utility = sum((u for _, u, _ in supporters), ZERO)
    for _, utility, bucket in supporters:
        breakpoint_q = bucket / utility
        candidate = (target - capped) / active_utility
        if candidate <= breakpoint_q:
            return candidate
        capped += bucket
        active_utility -= utility
    raise AssertionError("unreachable: total supporter money covers the cost")


def mes_payments(q, utilities: Mapping[str, object], buckets: Mapping[str, object]):
    """Each supporter pays min(q * u_i, b_i); zero payers are dropped."""
    payments = {}
    for agent_id, utility in utilities.items():
        if utility > 0:
            paid = min(q * utility, buckets[agent_id])
            if paid > 0:
                payments[agent_id] = paid
    return payments


def run_mes(instance: ValidatedInstance) -> AllocationResult:
    """Iteratively fund the lowest-price project among individuals only.

    Field agents are ignored; every individual's bucket is B/n regardless of
    the instance's split. Utilities enter raw (unnormalized). Ties on q break
    by lower cost, then smaller id.
    """
    individuals = [a.id for a in instance.agents if a.kind is AgentKind.INDIVIDUAL]
    if not individuals:
        return AllocationResult("mes", (), {}, {}, ())
    share = Rat(instance.config.total_budget.cents) / len(individuals)
    buckets = {agent_id: share for agent_id in individuals}

    raw = {
        project.id: {
            agent_id: instance.ballots.get(agent_id, project.id)
            for agent_id in individuals
            if instance.ballots.get(agent_id, project.id) > 0
        }
        for project in instance.projects
    }

    funded: list[str] = []
    rounds: list[RoundRecord] = []
    while True:
        best = None
        for project in instance.projects:
            if project.id in funded:
                continue
            q = min_q_affordable(project.cost, raw[project.id], buckets)
            if q is None:
                continue
            key = (q, project.cost.cents, project.id)
            if best is None or key < best[0]:
                best = (key, project.id, q)
        if best is None:
            break
        _, chosen, q = best
        payments = mes_payments(q, raw[chosen], buckets)
        for agent_id, paid in payments.items():
            buckets[agent_id] -= paid
        funded.append(chosen)
        rounds.append(
            RoundRecord(
                index=len(rounds) + 1,
                selected=chosen,
                support=sum(payments.values(), ZERO),
                payments=payments,
                price=q,
            )
        )

    receipts: dict[tuple[str, str], Money] = {}
    for record in rounds:
        cost_cents = instance.project_by_id[record.selected].cost.cents
        for agent_id, cents in allocate_cents(cost_cents, record.payments).items():
            if cents > 0:
                receipts[(agent_id, record.selected)] = Money(cents)

    return AllocationResult(
        rule="mes",
        funded=tuple(funded),
        receipts=receipts,
        leftover=buckets,
        rounds=tuple(rounds),
    )


def channel_points(instance: ValidatedInstance, channel: GreedyChannel) -> dict[str, object]:
    """Total raw points per project from one channel's agents."""
    kind = AgentKind.INDIVIDUAL if channel is GreedyChannel.INDIVIDUAL else AgentKind.FIELD
    agents = [a.id for a in instance.agents if a.kind is kind]
    totals: dict[str, object] = {}
    for project in instance.projects:
        totals[project.id] = sum(
            (instance.ballots.get(agent_id, project.id) for agent_id in agents), ZERO
        )
    return totals


def run_greedy(
    instance: ValidatedInstance,
    channel: GreedyChannel,
    stop_at_first_unaffordable: bool = False,
) -> AllocationResult:
    """Fund projects in descending point order while the budget allows.

    Only projects with positive channel points are ranked. The default walks
    past projects that no longer fit (skip-and-continue); the stop variant
    halts at the first one that does not.
    """
    points = channel_points(instance, channel)
    ranking = sorted(
        (p for p in instance.projects if points[p.id] > 0),
        key=lambda p: (-points[p.id], p.cost.cents, p.id),
    )

    remaining = instance.config.total_budget.cents
    funded: list[str] = []
    rounds: list[RoundRecord] = []
    receipts: dict[tuple[str, str], Money] = {}
    for project in ranking:
        if project.cost.cents > remaining:
            if stop_at_first_unaffordable:
                break
            continue
        remaining -= project.cost.cents
        funded.append(project.id)
        payment = Rat(project.cost.cents)
        rounds.append(
            RoundRecord(
                index=len(rounds) + 1,
                selected=project.id,
                support=points[project.id],
                payments={POOLED_AGENT_ID: payment},
            )
        )
        receipts[(POOLED_AGENT_ID, project.id)] = Money(project.cost.cents)

    rule = "greedy-ind" if channel is GreedyChannel.INDIVIDUAL else "greedy-grp"
    return AllocationResult(
        rule=rule,
        funded=tuple(funded),
        receipts=receipts,
        leftover={POOLED_AGENT_ID: Rat(remaining)},
        rounds=tuple(rounds),
    )
