"""Empirical estimators: growth rates, entry rates, size-dependent growth,
founding-probability series, collaborative classification, and inter-arrival
censoring correction.

All estimators accept gap masks and skip masked months; the upstream data
has documented disruption periods and the estimators should not silently
interpolate across them.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from .errors import AlignmentError, DegenerateDataError, DomainError
from .events import MembershipEventLog
from .snapshots import SnapshotSummary, snapshot_at

__all__ = [
    "GrowthFit",
    "EntryRateSeries",
    "GammaFit",
    "P0Series",
    "InterArrivalFit",
    "ProjectLabel",
    "DAYS_PER_MONTH",
    "fit_exponential_growth",
    "relative_entry_rates",
    "size_dependent_growth",
    "p0_series",
    "classify_collaborative",
    "collaborative_entry_counts",
    "fit_interarrival_waits",
    "interarrival_fit",
]

DAYS_PER_MONTH = 365.25 / 12.0


# ---------------------------------------------------------------------------
# aggregate exponential growth


@dataclass(frozen=True)
class GrowthFit:
    """Per-month exponential growth rate from OLS of ln X on month."""

    omega: float
    r_squared: float
    p_value: float
    n_points: int


def fit_exponential_growth(
    months: Sequence[int],
    values: Sequence[float],
    mask: frozenset[int] | set[int] | None = None,
) -> GrowthFit:
    """Least-squares slope of ln X(t) against t, i.e. X(t) ~ exp(omega t)."""
    mask = mask or frozenset()
    months = np.asarray(months, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if months.shape != values.shape:
        raise DomainError("months and values must have equal length")
    keep = ~np.isin(months, list(mask))
    months, values = months[keep], values[keep]
    bad = np.flatnonzero(values <= 0)
    if bad.size:
        raise DomainError(f"nonpositive value at month {int(months[bad[0]])}")
    if months.size < 3:
        raise DegenerateDataError(f"need >= 3 unmasked points, got {months.size}")
    res = sstats.linregress(months, np.log(values))
    return GrowthFit(
        omega=float(res.slope),
        r_squared=float(res.rvalue**2),
        p_value=float(res.pvalue),
        n_points=int(months.size),
    )


# ---------------------------------------------------------------------------
# relative monthly entry rates


@dataclass(frozen=True)
class EntryRateSeries:
    """g(t) = (N(t) - N(t-1)) / N(t) with its median and decile spread."""

    months: np.ndarray
    values: np.ndarray
    median: float
    q10: float
    q90: float

    def __post_init__(self):
        m = np.asarray(self.months, dtype=np.int64)
        v = np.asarray(self.values, dtype=np.float64)
        m.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "months", m)
        object.__setattr__(self, "values", v)


def _entry_rate(months, totals, mask) -> EntryRateSeries:
    out_m, out_v = [], []
    by_month = dict(zip(months, totals))
    for t in sorted(by_month):
        if t in mask or (t - 1) not in by_month or (t - 1) in mask:
            continue
        n_t = by_month[t]
        if n_t == 0:
            continue  # division by zero: masked point
        out_m.append(t)
        out_v.append((n_t - by_month[t - 1]) / n_t)
    values = np.asarray(out_v)
    if values.size == 0:
        raise DegenerateDataError("no consecutive unmasked month pairs")
    return EntryRateSeries(
        months=np.asarray(out_m, dtype=np.int64),
        values=values,
        median=float(np.median(values)),
        q10=float(np.quantile(values, 0.10)),
        q90=float(np.quantile(values, 0.90)),
    )


def relative_entry_rates(
    summaries: Sequence[SnapshotSummary],
    mask: frozenset[int] | set[int] | None = None,
) -> tuple[EntryRateSeries, EntryRateSeries]:
    """(projects, developers) relative monthly entry rate series."""
    mask = mask or frozenset()
    months = [s.month for s in summaries]
    projects = _entry_rate(months, [s.n_projects for s in summaries], mask)
    developers = _entry_rate(months, [s.n_developers for s in summaries], mask)
    return projects, developers


# ---------------------------------------------------------------------------
# size-dependent growth exponent


@dataclass(frozen=True)
class GammaFit:
    """Fitted exponent of mean growth rate vs starting size (log-log OLS)."""

    gamma: float
    stderr: float
    intercept: float
    bin_sizes: tuple[float, ...]
    bin_rates: tuple[float, ...]
    bin_counts: tuple[int, ...]
    window_months: int


def _log2_bins(sizes: np.ndarray, increments: np.ndarray, min_bin_count: int):
    """Mean size and mean increment per log2 size bin, sparse bins merged left."""
    edges_hi = int(np.ceil(np.log2(sizes.max() + 1)))
    bins: list[tuple[list[float], list[float]]] = []
    for j in range(edges_hi + 1):
        sel = (sizes >= 2**j) & (sizes < 2 ** (j + 1))
        if sel.any():
            bins.append((list(sizes[sel]), list(increments[sel])))
    # merge sparse bins into their left neighbour, right to left
    i = len(bins) - 1
    while i > 0:
        if len(bins[i][0]) < min_bin_count:
            bins[i - 1][0].extend(bins[i][0])
            bins[i - 1][1].extend(bins[i][1])
            bins.pop(i)
        i -= 1
    return [
        (float(np.mean(s)), float(np.mean(g)), len(s))
        for s, g in bins
        if len(s) >= min_bin_count
    ]


def size_dependent_growth(
    log: MembershipEventLog,
    window_months: int = 12,
    min_bin_count: int = 20,
    mask: frozenset[int] | set[int] | None = None,
) -> dict[int, GammaFit]:
    """Growth exponent per window: mean increment of projects binned by
    starting size, fitted as log(rate) = gamma*log(size) + const.

    Windows are consecutive non-overlapping [start, start+window) intervals
    from the log's first month; the key is the window's start month. Windows
    containing masked months are skipped.
    """
    mask = mask or frozenset()
    lo, hi = log.month_range
    if hi - lo < window_months:
        raise DomainError(f"log spans {hi - lo} months, need >= {window_months}")

    fits: dict[int, GammaFit] = {}
    start = lo
    while start + window_months <= hi:
        window = range(start, start + window_months + 1)
        if any(m in mask for m in window):
            start += window_months
            continue
        first = snapshot_at(log, start)
        last = snapshot_at(log, start + window_months)
        size0: dict[str, int] = {}
        for _, p in first.links:
            size0[p] = size0.get(p, 0) + 1
        size1: dict[str, int] = {}
        for _, p in last.links:
            size1[p] = size1.get(p, 0) + 1
        if not size0:
            start += window_months
            continue
        projects = sorted(size0)
        sizes = np.array([size0[p] for p in projects], dtype=np.float64)
        rates = np.array(
            [(size1.get(p, 0) - size0[p]) / window_months for p in projects], dtype=np.float64
        )
        binned = [(s, g, c) for s, g, c in _log2_bins(sizes, rates, min_bin_count) if g > 0]
        if len(binned) >= 2:
            bx = np.log([b[0] for b in binned])
            by = np.log([b[1] for b in binned])
            res = sstats.linregress(bx, by)
            fits[start] = GammaFit(
                gamma=float(res.slope),
                stderr=float(res.stderr),
                intercept=float(res.intercept),
                bin_sizes=tuple(b[0] for b in binned),
                bin_rates=tuple(b[1] for b in binned),
                bin_counts=tuple(b[2] for b in binned),
                window_months=window_months,
            )
        start += window_months
    if not fits:
        raise DegenerateDataError("no window produced enough populated size bins")
    return fits


# ---------------------------------------------------------------------------
# founding-probability series


@dataclass(frozen=True)
class P0Series:
    """Monthly p0(t) = delta N_p / delta N_d with the inputs retained."""

    months: np.ndarray
    values: np.ndarray
    g1: np.ndarray  # monthly new projects
    gtot: np.ndarray  # monthly new developers
    variant: str
    median: float

    def __post_init__(self):
        for name, dtype in (
            ("months", np.int64),
            ("values", np.float64),
            ("g1", np.float64),
            ("gtot", np.float64),
        ):
            arr = np.asarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def above_one(self) -> np.ndarray:
        """Months with p0 > 1: impossible under entry-only founding, so a
        diagnostic that established members are founding projects."""
        return self.months[self.values > 1.0]


def p0_series(
    months: Sequence[int],
    delta_projects: Sequence[float],
    delta_developers: Sequence[float],
    variant: str = "all",
    mask: frozenset[int] | set[int] | None = None,
) -> P0Series:
    """Ratio series of project entries to developer entries per month.

    Months that are masked or have a zero developer inflow are dropped
    (masked on the spot), matching the division-by-zero contract.
    """
    if variant not in ("all", "collaborative"):
        raise DomainError(f"variant must be 'all' or 'collaborative', got {variant!r}")
    mask = mask or frozenset()
    months = np.asarray(months, dtype=np.int64)
    g1 = np.asarray(delta_projects, dtype=np.float64)
    gtot = np.asarray(delta_developers, dtype=np.float64)
    if not (months.size == g1.size == gtot.size):
        raise AlignmentError("months, delta_projects, delta_developers must align")
    keep = (~np.isin(months, list(mask))) & (gtot > 0)
    months, g1, gtot = months[keep], g1[keep], gtot[keep]
    if months.size == 0:
        raise DegenerateDataError("no usable months for the p0 series")
    values = g1 / gtot
    return P0Series(
        months=months,
        values=values,
        g1=g1,
        gtot=gtot,
        variant=variant,
        median=float(np.median(values)),
    )


# ---------------------------------------------------------------------------
# collaborative classification


@dataclass(frozen=True)
class ProjectLabel:
    project_id: str
    collaborative: bool
    first_month: int
    censored: bool


def classify_collaborative(
    log: MembershipEventLog,
    observation_end: int,
    censor_horizon_months: float | None = None,
) -> dict[str, ProjectLabel]:
    """Label a project collaborative iff it ever reaches size >= 2 by
    observation_end (size = simultaneously active developers).

    Projects born within censor_horizon_months of the end carry a censoring
    flag: their second developer may simply not have arrived yet. Extending
    observation_end can only turn non-collaborative labels into
    collaborative ones, never the reverse.
    """
    labels: dict[str, ProjectLabel] = {}
    horizon = censor_horizon_months if censor_horizon_months is not None else 0.0
    for project, events in log.by_project.items():
        first = min(ev.entry_month for ev in events)
        if first > observation_end:
            continue
        collaborative = False
        # size over time changes only at entry/exit months of this project
        change_months = sorted(
            {ev.entry_month for ev in events}
            | {ev.exit_month for ev in events if ev.exit_month is not None}
        )
        for m in change_months:
            if m > observation_end:
                break
            active = sum(1 for ev in events if ev.active_at(m))
            if active >= 2:
                collaborative = True
                break
        labels[project] = ProjectLabel(
            project_id=project,
            collaborative=collaborative,
            first_month=first,
            censored=first > observation_end - horizon,
        )
    return labels


def collaborative_entry_counts(
    log: MembershipEventLog,
    observation_end: int,
    months: tuple[int, int] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(months, new collaborative projects, new developers excluding founders
    of non-collaborative projects) for the collaborative p0 variant.

    A developer is excluded in their entry month if their first link founds a
    project labelled non-collaborative (exclusion at entry month; the data
    does not say whether the original analysis excluded retroactively).
    """
    labels = classify_collaborative(log, observation_end)
    lo, hi = months if months is not None else log.month_range
    hi = min(hi, observation_end)
    idx = np.arange(lo, hi + 1)
    new_p = np.zeros(idx.size, dtype=np.int64)
    new_d = np.zeros(idx.size, dtype=np.int64)

    for project, first in log.project_first_month.items():
        label = labels.get(project)
        if label is not None and label.collaborative and lo <= first <= hi:
            new_p[first - lo] += 1

    founders_non_collab: set[str] = set()
    for project, events in log.by_project.items():
        label = labels.get(project)
        if label is None or label.collaborative:
            continue
        first = label.first_month
        for ev in events:
            if ev.entry_month == first and log.developer_first_month[ev.developer_id] == first:
                founders_non_collab.add(ev.developer_id)

    for developer, first in log.developer_first_month.items():
        if lo <= first <= hi and developer not in founders_non_collab:
            new_d[first - lo] += 1

    return idx, new_p, new_d


# ---------------------------------------------------------------------------
# inter-arrival waits of the second developer


@dataclass(frozen=True)
class InterArrivalFit:
    """Exponential fit of waits until the second developer joins."""

    lam: float  # rate per day
    mean_days: float
    prob_before_mean: float
    censor_factor: float
    n_waits: int
    n_censored: int
    exponential_plausible: bool


def fit_interarrival_waits(
    waits_days: Sequence[float],
    n_censored: int = 0,
    min_waits: int = 30,
) -> InterArrivalFit:
    """Closed-form exponential MLE on uncensored waits.

    lambda = 1/mean; prob_before_mean is the empirical fraction of waits
    strictly below the mean (analytically 1 - 1/e for an exponential), and
    its reciprocal is the factor correcting right-censored classification
    counts. A degenerate fraction of 0 flags the sample as non-exponential.
    """
    waits = np.asarray(waits_days, dtype=np.float64)
    if waits.size < min_waits:
        raise DegenerateDataError(f"need >= {min_waits} uncensored waits, got {waits.size}")
    if np.any(waits < 0):
        raise DomainError("waits must be nonnegative")
    mean_days = float(waits.mean())
    if mean_days <= 0:
        raise DegenerateDataError("all waits are zero; no rate is identifiable")
    prob = float((waits < mean_days).mean())
    plausible = prob > 0.0
    return InterArrivalFit(
        lam=1.0 / mean_days,
        mean_days=mean_days,
        prob_before_mean=prob,
        censor_factor=1.0 / prob if plausible else float("inf"),
        n_waits=int(waits.size),
        n_censored=int(n_censored),
        exponential_plausible=plausible,
    )


def interarrival_fit(
    log: MembershipEventLog,
    cohort_months: Iterable[int],
    days_per_month: float = DAYS_PER_MONTH,
    min_waits: int = 30,
) -> InterArrivalFit:
    """Fit waits (project creation -> second distinct developer) for the
    cohort of projects born in the given months.

    The log is month-granular, so waits are month differences scaled by
    days_per_month. Projects that never gain a second developer are counted
    as censored and excluded from the fit.
    """
    cohort = set(cohort_months)
    waits: list[float] = []
    censored = 0
    for project, events in log.by_project.items():
        # second DISTINCT developer; a rejoining founder is not a second one
        first_join: dict[str, int] = {}
        for ev in events:
            prev = first_join.get(ev.developer_id)
            if prev is None or ev.entry_month < prev:
                first_join[ev.developer_id] = ev.entry_month
        joins = sorted(first_join.values())
        if joins[0] not in cohort:
            continue
        if len(joins) >= 2:
            waits.append((joins[1] - joins[0]) * days_per_month)
        else:
            censored += 1
    return fit_interarrival_waits(waits, n_censored=censored, min_waits=min_waits)
