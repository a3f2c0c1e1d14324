"""Seeded synthetic fixtures shaped like a real decision-day instance.

All fixtures are synthetic: 36 voters spreading 20 points over at least
three of 121 projects, eight weighted impact fields, budget 380,000.00,
costs uniform in 3,000-40,000. Voter attention follows a Zipf-like
popularity skew so support concentrates the way real ballots do.
"""

from __future__ import annotations

import random

from .model import Money
from .pbfile import GroupPointsSheet, PbFile, PbProject, PbVote

DEFAULT_FIELD_WEIGHTS: dict[str, int] = {
    "curiosity": 19,
    "community": 18,
    "public_space": 15,
    "emotional": 13,
    "newcomers": 11,
    "creativity": 10,
    "nature": 9,
    "tradition": 6,
}

DEFAULT_BUDGET = "380000.00"
PROJECT_COUNT = 121
VOTER_COUNT = 36
POINTS_PER_VOTER = 20
COST_RANGE_CHF = (3_000, 40_000)


def _popularity(rng: random.Random, project_ids: list[str]) -> dict[str, float]:
    """Zipf-ish attention weights over a shuffled project order."""
    order = list(project_ids)
    rng.shuffle(order)
    return {pid: 1.0 / (rank**0.85) for rank, pid in enumerate(order, start=1)}


def _weighted_sample(rng: random.Random, weights: dict[str, float], k: int) -> list[str]:
    """k distinct ids drawn with probability proportional to weight."""
    pool = dict(weights)
    chosen: list[str] = []
    for _ in range(min(k, len(pool))):
        ids = list(pool)
        total = sum(pool.values())
        pick = rng.random() * total
        acc = 0.0
        winner = ids[-1]
        for pid in ids:
            acc += pool[pid]
            if pick <= acc:
                winner = pid
                break
        chosen.append(winner)
        del pool[winner]
    return chosen


def synth_kk25(
    seed: int,
    field_weights: dict[str, int] | None = None,
    budget: str = DEFAULT_BUDGET,
) -> tuple[PbFile, GroupPointsSheet]:
    """Deterministic decision-day-shaped fixture for the given seed."""
    rng = random.Random(seed)
    weights = dict(field_weights or DEFAULT_FIELD_WEIGHTS)
    fields = list(weights)

    project_ids = [f"p{i:03d}" for i in range(1, PROJECT_COUNT + 1)]
    popularity = _popularity(rng, project_ids)

    projects: list[PbProject] = []
    for pid in project_ids:
        cost_chf = rng.randint(*COST_RANGE_CHF)
        tags = _weighted_sample(
            rng, {fid: weights[fid] for fid in fields}, rng.randint(1, 3)
        )
        projects.append(
            PbProject(
                id=pid,
                cost=Money(cost_chf * 100),
                name=f"Project {pid[1:]}",
                annotations={fid: rng.randint(1, 3) for fid in sorted(tags)},
            )
        )

    votes: list[PbVote] = []
    for v in range(1, VOTER_COUNT + 1):
        count = rng.randint(3, 8)
        picked = sorted(_weighted_sample(rng, popularity, count))
        points = [1] * count
        for _ in range(POINTS_PER_VOTER - count):
            points[rng.randrange(count)] += 1
        votes.append(PbVote(f"v{v:02d}", tuple(picked), tuple(points)))

    meta = {
        "budget": budget,
        "currency": "CHF",
        "vote_type": "cumulative",
        "description": f"synthetic fixture (seed {seed})",
        "points_per_voter": str(POINTS_PER_VOTER),
    }
    file = PbFile(
        meta=meta,
        projects=projects,
        votes=votes,
        has_name_column=True,
        has_annotations_column=True,
        has_points_column=True,
    )

    # Group deliberation: each field's table points scale with its weight.
    sheet = GroupPointsSheet()
    for fid in fields:
        table_points = weights[fid] * 10
        menu = _weighted_sample(rng, popularity, rng.randint(12, 20))
        shares = [popularity[pid] * rng.uniform(0.5, 1.5) for pid in menu]
        total_share = sum(shares)
        allocated = [int(table_points * s / total_share) for s in shares]
        leftover = table_points - sum(allocated)
        for i in range(leftover):
            allocated[i % len(allocated)] += 1
        for pid, points in sorted(zip(menu, allocated)):
            if points > 0:
                sheet.rows.append((fid, pid, points))

    return file, sheet
