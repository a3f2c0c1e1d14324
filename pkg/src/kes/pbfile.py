"""Pabulib-style ``.pb`` ballot files and the group-points CSV sheet.

A ``.pb`` file is line-oriented, semicolon-separated, with three sections in
fixed order: META (``key;value`` rows, requiring budget/currency/vote_type),
PROJECTS (header then rows), VOTES (header then rows). Unknown columns are
kept as opaque extras and reported as warnings, never rejected. Serialization
is canonical: required meta keys first, then the rest lexicographically;
known columns first, then extras lexicographically; costs with two fraction
digits; ``\\n`` line endings. ``parse(serialize(x))`` is structurally ``x``
and ``serialize(parse(b))`` is byte-identical for canonical ``b``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Iterable

from .model import (
    Agent,
    BallotSet,
    Money,
    Project,
    ScenarioConfig,
    ValidatedInstance,
    ValidationError,
    build_instance,
)
from .rational import Rat

log = logging.getLogger(__name__)

REQUIRED_META = ("budget", "currency", "vote_type")
PROJECT_KNOWN_COLUMNS = ("project_id", "cost", "name", "annotations")
VOTE_KNOWN_COLUMNS = ("voter_id", "vote", "points")


class PbParseError(Exception):
    """Base parse failure; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class MissingSectionError(PbParseError):
    pass


class MalformedRowError(PbParseError):
    pass


class VoteForUnknownProjectError(PbParseError):
    pass


class UnknownFieldError(PbParseError):
    pass


class NegativePointsError(PbParseError):
    pass


class DuplicatePairError(PbParseError):
    pass


@dataclass
class PbProject:
    id: str
    cost: Money
    name: str = ""
    annotations: dict[str, int] = field(default_factory=dict)
    extras: dict[str, str] = field(default_factory=dict)


@dataclass
class PbVote:
    voter_id: str
    project_ids: tuple[str, ...]
    points: tuple[int, ...] | None = None
    extras: dict[str, str] = field(default_factory=dict)


@dataclass
class PbFile:
    meta: dict[str, str]
    projects: list[PbProject]
    votes: list[PbVote]
    has_name_column: bool = False
    has_annotations_column: bool = False
    has_points_column: bool = True
    project_extra_columns: tuple[str, ...] = ()
    vote_extra_columns: tuple[str, ...] = ()
    warnings: list[str] = field(default_factory=list)

    @property
    def budget(self) -> Money:
        return Money.from_str(self.meta["budget"])


def _parse_annotations(text: str, line: int) -> dict[str, int]:
    """``fid:count,fid:count`` pairs; empty string means no tags."""
    tags: dict[str, int] = {}
    if not text:
        return tags
    for chunk in text.split(","):
        fid, colon, count = chunk.partition(":")
        if not colon or not count.isdigit():
            raise MalformedRowError(f"bad annotation entry {chunk!r}", line)
        tags[fid.strip()] = int(count)
    return tags


def parse_pb(data: bytes) -> PbFile:
    """Parse ``.pb`` bytes, preserving declaration order and extras."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedRowError(f"not valid UTF-8: {exc}") from None

    lines = [(number, raw.rstrip("\r")) for number, raw in enumerate(text.split("\n"), start=1)]
    lines = [(number, line) for number, line in lines if line.strip()]
    cursor = 0

    def peek():
        return lines[cursor] if cursor < len(lines) else (None, None)

    number, line = peek()
    if line != "META":
        raise MissingSectionError("expected META section header", number or 1)
    meta_header_line = number
    cursor += 1

    number, line = peek()
    if line != "key;value":
        raise MalformedRowError("META must start with its 'key;value' header", number or meta_header_line)
    cursor += 1

    meta: dict[str, str] = {}
    meta_lines: dict[str, int] = {}
    while True:
        number, line = peek()
        if line is None:
            raise MissingSectionError(
                "expected PROJECTS section header", lines[-1][0] if lines else None
            )
        if line == "PROJECTS":
            cursor += 1
            break
        key, sep, value = line.partition(";")
        if not sep:
            raise MalformedRowError(f"META row needs 'key;value', got {line!r}", number)
        if key in meta:
            raise MalformedRowError(f"duplicate META key {key!r}", number)
        meta[key] = value
        meta_lines[key] = number
        cursor += 1

    for required in REQUIRED_META:
        if required not in meta:
            raise MalformedRowError(f"META missing required key {required!r}", meta_header_line)
    try:
        Money.from_str(meta["budget"])
    except ValidationError as exc:
        raise MalformedRowError(str(exc), meta_lines["budget"]) from None
    warnings: list[str] = []

    number, line = peek()
    if line is None:
        raise MalformedRowError("PROJECTS needs a header row", None)
    project_columns = line.split(";")
    for required in ("project_id", "cost"):
        if required not in project_columns:
            raise MalformedRowError(f"PROJECTS header missing column {required!r}", number)
    for column in project_columns:
        if column not in PROJECT_KNOWN_COLUMNS:
            warnings.append(f"unknown PROJECTS column {column!r} kept as extra")
    cursor += 1

    projects: list[PbProject] = []
    seen_projects: set[str] = set()
    while True:
        number, line = peek()
        if line is None:
            raise MissingSectionError("expected VOTES section header", lines[-1][0])
        if line == "VOTES":
            cursor += 1
            break
        cells = line.split(";")
        if len(cells) != len(project_columns):
            raise MalformedRowError(
                f"expected {len(project_columns)} fields, got {len(cells)}", number
            )
        row = dict(zip(project_columns, cells))
        pid = row.pop("project_id")
        if pid in seen_projects:
            raise MalformedRowError(f"duplicate project id {pid!r}", number)
        seen_projects.add(pid)
        try:
            cost = Money.from_str(row.pop("cost"))
        except ValidationError as exc:
            raise MalformedRowError(str(exc), number) from None
        name = row.pop("name", "")
        annotations = _parse_annotations(row.pop("annotations", ""), number)
        projects.append(PbProject(pid, cost, name, annotations, extras=row))
        cursor += 1

    number, line = peek()
    if line is None:
        raise MalformedRowError("VOTES needs a header row", None)
    vote_columns = line.split(";")
    for required in ("voter_id", "vote"):
        if required not in vote_columns:
            raise MalformedRowError(f"VOTES header missing column {required!r}", number)
    for column in vote_columns:
        if column not in VOTE_KNOWN_COLUMNS:
            warnings.append(f"unknown VOTES column {column!r} kept as extra")
    has_points = "points" in vote_columns
    cursor += 1

    votes: list[PbVote] = []
    seen_voters: set[str] = set()
    while True:
        number, line = peek()
        if line is None:
            break
        cells = line.split(";")
        if len(cells) != len(vote_columns):
            raise MalformedRowError(
                f"expected {len(vote_columns)} fields, got {len(cells)}", number
            )
        row = dict(zip(vote_columns, cells))
        voter = row.pop("voter_id")
        if voter in seen_voters:
            raise MalformedRowError(f"duplicate voter id {voter!r}", number)
        seen_voters.add(voter)
        vote_str = row.pop("vote")
        voted = tuple(v for v in vote_str.split(",") if v) if vote_str else ()
        for pid in voted:
            if pid not in seen_projects:
                raise VoteForUnknownProjectError(f"vote for undeclared project {pid!r}", number)
        points: tuple[int, ...] | None = None
        if has_points:
            points_str = row.pop("points")
            if points_str:
                tokens = points_str.split(",")
                if len(tokens) != len(voted):
                    raise MalformedRowError(
                        f"{len(voted)} projects voted but {len(tokens)} point values", number
                    )
                if not all(tok.isdigit() for tok in tokens):
                    raise MalformedRowError(f"points must be non-negative integers: {points_str!r}", number)
                points = tuple(int(tok) for tok in tokens)
            else:
                if voted:
                    raise MalformedRowError("vote listed but points column empty", number)
                points = ()
        votes.append(PbVote(voter, voted, points, extras=row))
        cursor += 1

    return PbFile(
        meta=meta,
        projects=projects,
        votes=votes,
        has_name_column="name" in project_columns,
        has_annotations_column="annotations" in project_columns,
        has_points_column=has_points,
        project_extra_columns=tuple(
            sorted(c for c in project_columns if c not in PROJECT_KNOWN_COLUMNS)
        ),
        vote_extra_columns=tuple(
            sorted(c for c in vote_columns if c not in VOTE_KNOWN_COLUMNS)
        ),
        warnings=warnings,
    )


def serialize_pb(file: PbFile) -> bytes:
    """Canonical byte form; see the module docstring for the ordering rules."""
    out: list[str] = ["META", "key;value"]
    for key in REQUIRED_META:
        out.append(f"{key};{file.meta[key]}")
    for key in sorted(file.meta):
        if key not in REQUIRED_META:
            out.append(f"{key};{file.meta[key]}")

    columns = ["project_id", "cost"]
    if file.has_name_column:
        columns.append("name")
    if file.has_annotations_column:
        columns.append("annotations")
    columns.extend(file.project_extra_columns)
    out.append("PROJECTS")
    out.append(";".join(columns))
    for project in file.projects:
        cells = [project.id, str(project.cost)]
        if file.has_name_column:
            cells.append(project.name)
        if file.has_annotations_column:
            cells.append(
                ",".join(f"{fid}:{count}" for fid, count in sorted(project.annotations.items()))
            )
        cells.extend(project.extras.get(c, "") for c in file.project_extra_columns)
        out.append(";".join(cells))

    columns = ["voter_id", "vote"]
    if file.has_points_column:
        columns.append("points")
    columns.extend(file.vote_extra_columns)
    out.append("VOTES")
    out.append(";".join(columns))
    for vote in file.votes:
        cells = [vote.voter_id, ",".join(vote.project_ids)]
        if file.has_points_column:
            cells.append(",".join(str(p) for p in vote.points or ()))
        cells.extend(vote.extras.get(c, "") for c in file.vote_extra_columns)
        out.append(";".join(cells))

    return ("\n".join(out) + "\n").encode("utf-8")


@dataclass
class GroupPointsSheet:
    """Deliberation points per (field, project); absent pairs mean zero."""

    rows: list[tuple[str, str, int]] = field(default_factory=list)

    def by_field(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for fid, pid, points in self.rows:
            out.setdefault(fid, {})[pid] = points
        return out


def parse_group_points(data: bytes, fields: Iterable[str]) -> GroupPointsSheet:
    """Parse the ``field,project,points`` CSV against the configured fields."""
    known = set(fields)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedRowError(f"not valid UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return GroupPointsSheet()
    if [cell.strip() for cell in rows[0]] != ["field", "project", "points"]:
        raise MalformedRowError("group sheet header must be 'field,project,points'", 1)

    sheet = GroupPointsSheet()
    seen: set[tuple[str, str]] = set()
    for number, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise MalformedRowError(f"expected 3 columns, got {len(row)}", number)
        fid, pid, points_str = (cell.strip() for cell in row)
        if fid not in known:
            raise UnknownFieldError(f"unknown impact field {fid!r}", number)
        try:
            points = int(points_str)
        except ValueError:
            raise MalformedRowError(f"points must be an integer, got {points_str!r}", number) from None
        if points < 0:
            raise NegativePointsError(f"negative points {points} for ({fid}, {pid})", number)
        if (fid, pid) in seen:
            raise DuplicatePairError(f"duplicate (field, project) pair ({fid}, {pid})", number)
        seen.add((fid, pid))
        sheet.rows.append((fid, pid, points))
    return sheet


def config_from_pb(
    file: PbFile,
    field_weights: dict | None = None,
    **overrides,
) -> ScenarioConfig:
    """ScenarioConfig seeded from META (budget) plus explicit overrides."""
    params: dict = {"total_budget": file.budget, "field_weights": field_weights or {}}
    params.update(overrides)
    return ScenarioConfig(**params)


def assemble(
    file: PbFile, sheet: GroupPointsSheet | None, config: ScenarioConfig
) -> ValidatedInstance:
    """Join the parsed ballot file and group sheet into a validated instance.

    VOTES rows become individuals (a vote without points counts 1 per listed
    project); each configured impact field becomes one weighted agent whose
    ballot is its sheet row. With ``points_preweighted`` unset, sheet rows are
    multiplied by the field's weight.
    """
    projects = [
        Project(p.id, p.name or p.id, p.cost, dict(p.annotations)) for p in file.projects
    ]

    agents: list[Agent] = [Agent.individual(v.voter_id) for v in file.votes]
    ballots = BallotSet()
    for vote in file.votes:
        points = vote.points if vote.points is not None else tuple(1 for _ in vote.project_ids)
        for pid, value in zip(vote.project_ids, points):
            ballots.set(vote.voter_id, pid, value)

    allowance = file.meta.get("points_per_voter")
    if allowance and allowance.isdigit():
        expected = int(allowance)
        for vote in file.votes:
            total = sum(vote.points or (1,) * len(vote.project_ids))
            if vote.project_ids and total != expected:
                log.warning(
                    "voter %s distributed %d points, file declares %d per voter",
                    vote.voter_id, total, expected,
                )

    by_field = sheet.by_field() if sheet else {}
    for fid, weight in config.field_weights.items():
        agents.append(Agent.field(fid, weight))
        row = by_field.get(fid, {})
        for pid, points in row.items():
            value = Rat(points) if config.points_preweighted else Rat(points) * Rat(weight)
            ballots.set(fid, pid, value)

    return build_instance(projects, agents, ballots, config)
