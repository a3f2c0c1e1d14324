"""The Komitee Equal Shares round loop.

Every agent, individual or impact field, holds an exact rational bucket.
Each round the most strongly supported affordable project is bought and its
cost split across supporters in proportion to bucket times normalized
utility. Utilities stay fixed; only buckets shrink. Receipts are rounded to
cents per project by largest remainder at the very end.
"""

from __future__ import annotations

from .model import (
    AllocationResult,
    Money,
    RoundRecord,
    ValidatedInstance,
    allocate_cents,
)
from .rational import Rat, ZERO


def compute_support(instance: ValidatedInstance, buckets, project_id: str):
    """S(p): sum over all agents of bucket times normalized utility."""
    total = ZERO
    for agent_id in instance.supporters[project_id]:
        total += buckets[agent_id] * instance.normalized[agent_id][project_id]
    return total


def affordable_set(instance: ValidatedInstance, buckets, funded=()) -> set[str]:
    """Projects not yet funded whose supporters can still cover the cost."""
    done = set(funded)
    result = set()
    for project in instance.projects:
        if project.id in done:
            continue
        support = compute_support(instance, buckets, project.id)
        if support > 0 and Rat(project.cost.cents) <= support:
            result.add(project.id)
    return result


def select_next(affordable, supports, instance: ValidatedInstance) -> str:
    """Strongest support wins; ties go to lower cost, then smaller id."""
    return min(
        affordable,
        key=lambda pid: (-supports[pid], instance.project_by_id[pid].cost.cents, pid),
    )


def fund(
    instance: ValidatedInstance, buckets, project_id: str, index: int, support=None
) -> RoundRecord:
    """Charge each supporter cost * (bucket * utility) / support; deduct.

    No payment can exceed the payer's bucket: the payer's own term of S is
    bucket * utility with utility <= 1, and cost <= S.
    """
    if support is None:
        support = compute_support(instance, buckets, project_id)
    cost = Rat(instance.project_by_id[project_id].cost.cents)
    payments: dict[str, object] = {}
    for agent_id in instance.supporters[project_id]:
        share = buckets[agent_id] * instance.normalized[agent_id][project_id]
        if share > 0:
            paid = cost * share / support
            payments[agent_id] = paid
            buckets[agent_id] -= paid
    return RoundRecord(index=index, selected=project_id, support=support, payments=payments)


def run_kes(instance: ValidatedInstance) -> AllocationResult:
    """Loop affordable -> select -> fund until nothing is affordable."""
    buckets = dict(instance.initial_buckets)
    funded: list[str] = []
    rounds: list[RoundRecord] = []

    while True:
        done = set(funded)
        supports: dict[str, object] = {}
        for project in instance.projects:
            if project.id not in done:
                supports[project.id] = compute_support(instance, buckets, project.id)
        affordable = {
            pid
            for pid, support in supports.items()
            if support > 0 and Rat(instance.project_by_id[pid].cost.cents) <= support
        }
        if not affordable:
            break
        chosen = select_next(affordable, supports, instance)
        rounds.append(
            fund(instance, buckets, chosen, index=len(rounds) + 1, support=supports[chosen])
        )
        funded.append(chosen)

    receipts = round_receipts(instance, rounds)
    return AllocationResult(
        rule="kes",
        funded=tuple(funded),
        receipts=receipts,
        leftover=buckets,
        rounds=tuple(rounds),
    )


def round_receipts(instance: ValidatedInstance, rounds) -> dict[tuple[str, str], Money]:
    """Cent receipts per funded project, summing exactly to its cost."""
    receipts: dict[tuple[str, str], Money] = {}
    for record in rounds:
        cost_cents = instance.project_by_id[record.selected].cost.cents
        rounded = allocate_cents(cost_cents, record.payments)
        for agent_id, cents in rounded.items():
            if cents > 0:
                receipts[(agent_id, record.selected)] = Money(cents)
    return receipts
