"""Monthly bipartite snapshots and their derived summaries.

A link (developer, project) is active in month t iff entry_month <= t and
(no exit or exit_month > t). Everything here is a pure function of the
immutable event log, so per-month computations are safe to evaluate
concurrently.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .distributions import DegreeDistribution, SizeDistribution
from .errors import DomainError
from .events import MembershipEventLog

__all__ = [
    "Snapshot",
    "SnapshotSummary",
    "EntryExitCounts",
    "snapshot_at",
    "summarize",
    "project_size_distribution",
    "developer_degree_distribution",
    "project_projection",
    "developer_projection",
    "entry_exit_counts",
]


@dataclass(frozen=True)
class Snapshot:
    month: int
    links: frozenset[tuple[str, str]]  # (developer_id, project_id)


@dataclass(frozen=True)
class SnapshotSummary:
    month: int
    n_developers: int
    n_projects: int
    n_links: int


def snapshot_at(log: MembershipEventLog, month: int) -> Snapshot:
    """Active-pair set in the given month."""
    lo, hi = log.month_range
    if not lo <= month <= hi:
        raise DomainError(f"month {month} outside observed range [{lo}, {hi}]")
    links = {
        (ev.developer_id, ev.project_id) for ev in log.events if ev.active_at(month)
    }
    return Snapshot(month=month, links=frozenset(links))


def summarize(snapshot: Snapshot) -> SnapshotSummary:
    developers = {d for d, _ in snapshot.links}
    projects = {p for _, p in snapshot.links}
    return SnapshotSummary(
        month=snapshot.month,
        n_developers=len(developers),
        n_projects=len(projects),
        n_links=len(snapshot.links),
    )


def project_size_distribution(snapshot: Snapshot) -> SizeDistribution:
    """n(x): number of projects with exactly x distinct active developers."""
    sizes = Counter(p for _, p in snapshot.links)
    return SizeDistribution.from_sizes(list(sizes.values()))


def developer_degree_distribution(snapshot: Snapshot) -> DegreeDistribution:
    """f(k): number of developers active in exactly k projects."""
    degrees = Counter(d for d, _ in snapshot.links)
    return DegreeDistribution.from_degrees(list(degrees.values()))


def _one_mode(groups: dict[str, list[str]]) -> dict[tuple[str, str], int]:
    """Co-membership projection: weight = number of shared neighbours."""
    weights: Counter[tuple[str, str]] = Counter()
    for members in groups.values():
        members = sorted(set(members))
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                weights[(a, b)] += 1
    return dict(weights)


def project_projection(snapshot: Snapshot) -> dict[tuple[str, str], int]:
    """Edges between projects sharing a developer; keys are sorted pairs."""
    by_dev: dict[str, list[str]] = {}
    for d, p in snapshot.links:
        by_dev.setdefault(d, []).append(p)
    return _one_mode(by_dev)


def developer_projection(snapshot: Snapshot) -> dict[tuple[str, str], int]:
    """Edges between developers sharing a project; keys are sorted pairs."""
    by_proj: dict[str, list[str]] = {}
    for d, p in snapshot.links:
        by_proj.setdefault(p, []).append(d)
    return _one_mode(by_proj)


@dataclass(frozen=True)
class EntryExitCounts:
    months: np.ndarray
    new_projects: np.ndarray
    removed_projects: np.ndarray
    new_developers: np.ndarray
    removed_developers: np.ndarray

    def __post_init__(self):
        for name in ("months", "new_projects", "removed_projects", "new_developers", "removed_developers"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _final_exit(events) -> int | None:
    """First month the entity is inactive for good: max exit over its links,
    or None while any link is still open."""
    latest = None
    for ev in events:
        if ev.exit_month is None:
            return None
        latest = ev.exit_month if latest is None else max(latest, ev.exit_month)
    return latest


def entry_exit_counts(
    log: MembershipEventLog, months: tuple[int, int] | None = None
) -> EntryExitCounts:
    """Per-month entries and removals for projects and developers.

    An entity is new in the month its first link appears and removed in the
    first month it has no active links after its last activity (the month
    index carried by its final exit). Entities with an open-ended link are
    never removed.
    """
    if months is None:
        months = log.month_range
    lo, hi = months
    if hi < lo:
        raise DomainError("empty month range")

    idx = np.arange(lo, hi + 1)
    new_p = np.zeros(idx.size, dtype=np.int64)
    rem_p = np.zeros(idx.size, dtype=np.int64)
    new_d = np.zeros(idx.size, dtype=np.int64)
    rem_d = np.zeros(idx.size, dtype=np.int64)

    def tally(first_by_entity: dict[str, int], grouped, new_arr, rem_arr):
        for entity, first in first_by_entity.items():
            if lo <= first <= hi:
                new_arr[first - lo] += 1
        for entity, events in grouped.items():
            final = _final_exit(events)
            if final is not None and lo <= final <= hi:
                rem_arr[final - lo] += 1

    tally(log.project_first_month, log.by_project, new_p, rem_p)
    tally(log.developer_first_month, log.by_developer, new_d, rem_d)

    return EntryExitCounts(
        months=idx,
        new_projects=new_p,
        removed_projects=rem_p,
        new_developers=new_d,
        removed_developers=rem_d,
    )
