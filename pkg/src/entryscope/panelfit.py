"""Weighted least-squares event-study estimation with two-way fixed effects.

The design always carries carrier-route and quarter fixed effects (full dummy
expansion with one reference level each, absorbed by within-demeaning for
very wide designs), event-time bin indicators with the baseline period
omitted, optionally one network measure interacted with the post-threat and
post-entry bins, and route-level controls. Covariances are
heteroskedasticity-robust (HC1) or clustered by carrier-route (CR1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .threatscan import (
    BASELINE_BIN,
    CONTROL_NAMES,
    EVENT_BINS,
    INTERACTION_BINS,
    OUTCOME_NAMES,
    PanelObservation,
    Z_NAMES,
)

log = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10  # relative to the largest diagonal of R
DENSE_COLUMN_LIMIT = 20_000
STAR_THRESHOLDS = ((2.576, "***"), (1.960, "**"), (1.645, "*"))


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class RegressionSpec:
    """What to estimate: outcome, optional interaction measure, controls,
    and the covariance estimator (fixed effects and passenger weights are
    always on)."""

    outcome: str = "ln_fare_mean"
    z_measure: str | None = None
    controls: tuple[str, ...] = ()
    covariance: str = "cluster"

    def __post_init__(self):
        if self.outcome not in OUTCOME_NAMES and self.outcome != "y":
            raise EstimationError(f"unknown outcome {self.outcome!r}")
        if self.z_measure is not None and self.z_measure not in Z_NAMES:
            raise EstimationError(f"unknown network measure {self.z_measure!r}")
        bad = [c for c in self.controls if c not in CONTROL_NAMES]
        if bad:
            raise EstimationError(f"unknown controls {bad}")
        if self.covariance not in ("robust", "cluster"):
            raise EstimationError(f"covariance must be 'robust' or 'cluster', got {self.covariance!r}")


@dataclass
class DesignData:
    """Expanded design matrix plus bookkeeping from its construction."""

    X: np.ndarray
    y: np.ndarray
    w: np.ndarray
    clusters: np.ndarray
    names: list[str]
    structural_names: list[str]
    dropped_columns: list[str]
    dropped_rows: dict[str, int]
    group_codes: np.ndarray
    quarter_codes: np.ndarray
    fe_group_count: int
    fe_quarter_count: int
    fe_components: int


@dataclass(frozen=True)
class Coefficient:
    name: str
    estimate: float
    se: float
    stars: str


@dataclass(frozen=True)
class FitResult:
    spec: RegressionSpec
    coefficients: dict[str, Coefficient]
    names: tuple[str, ...]
    cov: np.ndarray
    r_squared: float
    nobs: int
    nparams: int
    dropped_columns: tuple[str, ...]
    dropped_rows: dict[str, int] = field(default_factory=dict)
    solver: str = "qr"

    def estimate(self, name: str) -> float:
        return self.coefficients[name].estimate

    def se(self, name: str) -> float:
        return self.coefficients[name].se


def stars_for(estimate: float, se: float) -> str:
    """Significance stars at two-sided 99/95/90% normal thresholds."""
    if se == 0.0:
        t = math.inf if estimate != 0.0 else 0.0
    else:
        t = abs(estimate / se)
    for threshold, mark in STAR_THRESHOLDS:
        if t > threshold:
            return mark
    return ""


def effect_percent(coefficient: float) -> float:
    """Approximate percent change in the outcome for an indicator switch."""
    return 100.0 * (math.exp(coefficient) - 1.0)


def effect_at(gamma: float, psi: float, z: float) -> float:
    """Percent change at a given value of the interacted network measure."""
    return 100.0 * (math.exp(gamma + psi * z) - 1.0)


def _row_value(row: PanelObservation, spec: RegressionSpec):
    """(outcome, controls, z) for one row, or the reason it is unusable."""
    y = row.outcomes.get(spec.outcome)
    if y is None:
        return None, "missing_outcome"
    controls = []
    for name in spec.controls:
        v = row.controls.get(name)
        if v is None:
            return None, f"missing_{name}"
        controls.append(v)
    z = None
    if spec.z_measure is not None:
        z = row.z.get(spec.z_measure)
        if z is None:
            return None, f"missing_z_{spec.z_measure}"
    return (y, controls, z), ""


def design_matrix(panel: Sequence[PanelObservation], spec: RegressionSpec) -> DesignData:
    """Build the expanded design for one specification.

    Columns, in rank-priority order: intercept, carrier-route dummies
    (smallest label is the reference), quarter dummies (earliest is the
    reference), bin indicators, bin-times-measure interactions, the measure
    main effect, controls. Later columns that are exactly collinear with
    earlier ones are dropped and logged, so an unidentified control never
    distorts the fixed effects.
    """
    if not panel:
        raise EstimationError("panel is empty")

    rows: list[PanelObservation] = []
    values: list[tuple] = []
    dropped_rows: dict[str, int] = {}
    for row in panel:
        val, reason = _row_value(row, spec)
        if val is None:
            dropped_rows[reason] = dropped_rows.get(reason, 0) + 1
            continue
        rows.append(row)
        values.append(val)
    if dropped_rows:
        log.warning("dropped panel rows by reason: %s", dropped_rows)
    if not rows:
        raise EstimationError("no usable panel rows for this specification")

    bins = [r.event_bin for r in rows]
    if BASELINE_BIN not in bins:
        raise EstimationError("panel has no baseline rows; nothing is identified")
    if all(b == BASELINE_BIN for b in bins):
        raise EstimationError("panel is all baseline; nothing is identified")

    n = len(rows)
    y = np.array([v[0] for v in values], dtype=float)
    w = np.array([r.weight for r in rows], dtype=float)
    if np.any(w <= 0):
        raise EstimationError("weights must be strictly positive")
    clusters = np.array([r.cluster_id for r in rows])
    quarters = np.array([r.quarter.index for r in rows])

    group_labels, group_codes = np.unique(clusters, return_inverse=True)
    quarter_labels, quarter_codes = np.unique(quarters, return_inverse=True)
    n_groups = len(group_labels)
    n_quarters = len(quarter_labels)

    columns: list[np.ndarray] = [np.ones((n, 1))]
    names: list[str] = ["const"]
    group_dummies = np.zeros((n, n_groups))
    group_dummies[np.arange(n), group_codes] = 1.0
    columns.append(group_dummies[:, 1:])
    names.extend(f"fe_cr:{label}" for label in group_labels[1:])
    quarter_dummies = np.zeros((n, n_quarters))
    quarter_dummies[np.arange(n), quarter_codes] = 1.0
    columns.append(quarter_dummies[:, 1:])
    names.extend(f"fe_q:{_quarter_name(label)}" for label in quarter_labels[1:])

    structural_names: list[str] = []
    bin_arr = np.array(bins)
    bin_cols: dict[str, np.ndarray] = {}
    for b in EVENT_BINS:
        col = (bin_arr == b).astype(float)
        bin_cols[b] = col
        columns.append(col[:, None])
        names.append(b)
        structural_names.append(b)
    if spec.z_measure is not None:
        zvals = np.array([v[2] for v in values], dtype=float)
        for b in INTERACTION_BINS:
            columns.append((bin_cols[b] * zvals)[:, None])
            name = f"{b}_x_{spec.z_measure}"
            names.append(name)
            structural_names.append(name)
        columns.append(zvals[:, None])
        names.append(f"z_{spec.z_measure}")
        structural_names.append(f"z_{spec.z_measure}")
    for ci, cname in enumerate(spec.controls):
        columns.append(np.array([v[1][ci] for v in values], dtype=float)[:, None])
        names.append(cname)
        structural_names.append(cname)

    X = np.hstack(columns)
    keep, dropped = _independent_columns(X * np.sqrt(w)[:, None], names)
    if dropped:
        log.info("dropped collinear columns: %s", dropped)
    X = X[:, keep]
    kept_names = [names[i] for i in keep]
    structural_kept = [nm for nm in structural_names if nm in set(kept_names)]

    return DesignData(
        X=X,
        y=y,
        w=w,
        clusters=clusters,
        names=kept_names,
        structural_names=structural_kept,
        dropped_columns=dropped,
        dropped_rows=dropped_rows,
        group_codes=group_codes,
        quarter_codes=quarter_codes,
        fe_group_count=n_groups,
        fe_quarter_count=n_quarters,
        fe_components=_mobility_components(group_codes, quarter_codes),
    )


def _quarter_name(index: int) -> str:
    year, rem = divmod(int(index), 4)
    return f"{year}Q{rem + 1}"


def _independent_columns(
    Xw: np.ndarray, names: Sequence[str], tol: float = RANK_TOLERANCE
) -> tuple[list[int], list[str]]:
    """Indices of a maximal independent column set, respecting column order.

    In an unpivoted QR factorization |R_jj| is the residual norm of column j
    after projecting out all earlier columns, so columns with a tiny
    diagonal relative to the largest one are (numerically) spanned by their
    predecessors and can be dropped without changing the model space.
    """
    n, k = Xw.shape
    if k <= n:
        diag = np.abs(np.diag(np.linalg.qr(Xw, mode="r")))
        ref = diag.max()
        if ref == 0.0:
            raise EstimationError("design matrix is identically zero")
        keep = [j for j in range(k) if diag[j] > tol * ref]
        if len(keep) == k:
            return keep, []
    # Sequential Gram-Schmidt fallback; also re-checks after drops.
    basis: list[np.ndarray] = []
    keep = []
    dropped = []
    ref = max(np.linalg.norm(Xw, axis=0).max(), 1.0)
    for j in range(k):
        v = Xw[:, j].astype(float).copy()
        for q in basis:
            v -= (q @ v) * q
        for q in basis:  # second pass for numerical stability
            v -= (q @ v) * q
        norm = np.linalg.norm(v)
        if norm > tol * ref:
            basis.append(v / norm)
            keep.append(j)
        else:
            dropped.append(names[j])
    return keep, dropped


def _qr_fit(X: np.ndarray, y: np.ndarray, w: np.ndarray):
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] != w.shape[0]:
        raise EstimationError("X, y, w shapes do not line up")
    if np.any(w <= 0):
        raise EstimationError("weights must be strictly positive")
    sw = np.sqrt(w)
    Q, R = np.linalg.qr(X * sw[:, None])
    diag = np.abs(np.diag(R))
    if diag.min() <= RANK_TOLERANCE * max(diag.max(), 1.0):
        raise EstimationError("design matrix is rank deficient after drops")
    beta = solve_triangular(R, Q.T @ (y * sw), lower=False)
    fitted = X @ beta
    return beta, y - fitted, fitted, R


def fit_wls(
    X: np.ndarray, y: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimize the weighted sum of squared residuals by dense QR.

    Returns (coefficients, residuals, fitted) with residuals on the original
    (unweighted) scale.
    """
    beta, residuals, fitted, _ = _qr_fit(X, y, w)
    return beta, residuals, fitted


def _bread_inverse(X: np.ndarray, w: np.ndarray, r_factor: np.ndarray | None = None) -> np.ndarray:
    if r_factor is None:
        sw = np.sqrt(w)
        r_factor = np.linalg.qr(X * sw[:, None], mode="r")
    identity = np.eye(X.shape[1])
    inner = solve_triangular(r_factor, identity, trans="T", lower=False)
    return solve_triangular(r_factor, inner, lower=False)


def covariance_robust(
    X: np.ndarray,
    w: np.ndarray,
    residuals: np.ndarray,
    nparams: int | None = None,
    r_factor: np.ndarray | None = None,
) -> np.ndarray:
    """HC1 sandwich for weighted least squares.

    The score of observation i is w_i * e_i * x_i; the small-sample scaling
    is N / (N - K).
    """
    n = X.shape[0]
    k = nparams if nparams is not None else X.shape[1]
    if n <= k:
        raise EstimationError(f"no residual degrees of freedom (N={n}, K={k})")
    bread = _bread_inverse(X, w, r_factor)
    scores = X * (w * residuals)[:, None]
    meat = scores.T @ scores
    return (n / (n - k)) * bread @ meat @ bread


def covariance_cluster(
    X: np.ndarray,
    w: np.ndarray,
    residuals: np.ndarray,
    clusters: np.ndarray,
    nparams: int | None = None,
    r_factor: np.ndarray | None = None,
) -> np.ndarray:
    """CR1 sandwich: scores summed within clusters before the outer product,
    scaled by G/(G-1) * (N-1)/(N-K)."""
    n = X.shape[0]
    k = nparams if nparams is not None else X.shape[1]
    if n <= k:
        raise EstimationError(f"no residual degrees of freedom (N={n}, K={k})")
    labels, codes = np.unique(clusters, return_inverse=True)
    n_clusters = len(labels)
    if n_clusters < 2:
        raise EstimationError("cluster covariance needs at least two clusters")
    bread = _bread_inverse(X, w, r_factor)
    scores = X * (w * residuals)[:, None]
    sums = np.zeros((n_clusters, X.shape[1]))
    np.add.at(sums, codes, scores)
    meat = sums.T @ sums
    scale = (n_clusters / (n_clusters - 1)) * ((n - 1) / (n - k))
    return scale * bread @ meat @ bread


def r_squared(y: np.ndarray, fitted: np.ndarray, w: np.ndarray) -> float:
    """Weighted R-squared with weighted-mean centering."""
    ybar = np.sum(w * y) / np.sum(w)
    sst = np.sum(w * (y - ybar) ** 2)
    if sst == 0.0:
        raise EstimationError("outcome has zero weighted variation; R^2 undefined")
    ssr = np.sum(w * (y - fitted) ** 2)
    return 1.0 - ssr / sst


def _mobility_components(group_codes: np.ndarray, quarter_codes: np.ndarray) -> int:
    """Connected components of the bipartite carrier-route/quarter graph.

    With two fixed-effect families the span of the dummies has dimension
    G + T - C, so C enters the degrees-of-freedom count when the effects are
    absorbed rather than expanded.
    """
    n_groups = int(group_codes.max()) + 1
    n_quarters = int(quarter_codes.max()) + 1
    parent = list(range(n_groups + n_quarters))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g, q in zip(group_codes, quarter_codes):
        rg, rq = find(int(g)), find(int(q) + n_groups)
        if rg != rq:
            parent[rq] = rg
    return len({find(i) for i in range(n_groups + n_quarters)})


def _demean_two_way(
    M: np.ndarray,
    w: np.ndarray,
    group_codes: np.ndarray,
    quarter_codes: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Alternating weighted projections removing both fixed-effect families."""
    M = M.astype(float).copy()
    n_groups = int(group_codes.max()) + 1
    n_quarters = int(quarter_codes.max()) + 1
    wg = np.zeros(n_groups)
    np.add.at(wg, group_codes, w)
    wq = np.zeros(n_quarters)
    np.add.at(wq, quarter_codes, w)
    for _ in range(max_iter):
        before = M.copy()
        sums = np.zeros((n_groups, M.shape[1]))
        np.add.at(sums, group_codes, M * w[:, None])
        M -= (sums / wg[:, None])[group_codes]
        sums = np.zeros((n_quarters, M.shape[1]))
        np.add.at(sums, quarter_codes, M * w[:, None])
        M -= (sums / wq[:, None])[quarter_codes]
        if np.max(np.abs(M - before)) < tol:
            return M
    raise EstimationError(f"within-demeaning did not converge in {max_iter} sweeps")


def _fit_within(dm: DesignData) -> tuple:
    """Absorb both fixed-effect families, then fit the structural columns."""
    struct_idx = [i for i, nm in enumerate(dm.names) if nm in set(dm.structural_names)]
    stacked = np.column_stack([dm.y[:, None], dm.X[:, struct_idx]])
    demeaned = _demean_two_way(stacked, dm.w, dm.group_codes, dm.quarter_codes)
    y_t = demeaned[:, 0]
    X_t = demeaned[:, 1:]

    keep, dropped = _independent_columns(
        X_t * np.sqrt(dm.w)[:, None], [dm.names[i] for i in struct_idx]
    )
    X_t = X_t[:, keep]
    names = [dm.names[struct_idx[i]] for i in keep]
    beta, residuals, _fitted, r_factor = _qr_fit(X_t, y_t, dm.w)
    # The absorbed span (intercept plus both dummy families) has dimension
    # G + T - C, where C counts connected components of the group/quarter
    # incidence graph.
    nparams = X_t.shape[1] + dm.fe_group_count + dm.fe_quarter_count - dm.fe_components
    return beta, residuals, X_t, names, dropped, nparams, r_factor


def fit_event_study(
    panel: Sequence[PanelObservation], spec: RegressionSpec, solver: str = "auto"
) -> FitResult:
    """Estimate one event-study specification on the panel.

    ``solver="qr"`` fits the fully expanded dummy design; ``"within"``
    absorbs both fixed-effect families by alternating projections and
    reports only the structural coefficients. ``"auto"`` switches to the
    within path when the expanded design would exceed 20,000 columns. Both
    paths agree to numerical precision.
    """
    dm = design_matrix(panel, spec)
    if solver == "auto":
        solver = "within" if len(dm.names) > DENSE_COLUMN_LIMIT else "qr"

    if solver == "qr":
        beta, residuals, fitted, r_factor = _qr_fit(dm.X, dm.y, dm.w)
        names = list(dm.names)
        X_used = dm.X
        nparams = dm.X.shape[1]
        dropped = list(dm.dropped_columns)
        y = dm.y
    elif solver == "within":
        beta, residuals, X_used, names, extra_dropped, nparams, r_factor = _fit_within(dm)
        dropped = list(dm.dropped_columns) + list(extra_dropped)
        y = dm.y
        fitted = y - residuals
    else:
        raise EstimationError(f"unknown solver {solver!r}")

    if spec.covariance == "cluster":
        cov = covariance_cluster(X_used, dm.w, residuals, dm.clusters, nparams, r_factor)
    else:
        cov = covariance_robust(X_used, dm.w, residuals, nparams, r_factor)
    # The sandwich is PSD up to roundoff; clip the odd -1e-18 diagonal entry.
    ses = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    order = _display_order(names, spec)
    coefficients = {}
    for i in order:
        est = float(beta[i])
        se = float(ses[i])
        coefficients[names[i]] = Coefficient(names[i], est, se, stars_for(est, se))
    ordered_names = tuple(names[i] for i in order)
    cov_ordered = cov[np.ix_(order, order)]

    return FitResult(
        spec=spec,
        coefficients=coefficients,
        names=ordered_names,
        cov=cov_ordered,
        r_squared=r_squared(y, fitted, dm.w),
        nobs=len(dm.y),
        nparams=nparams,
        dropped_columns=tuple(dropped),
        dropped_rows=dict(dm.dropped_rows),
        solver=solver,
    )


def _display_order(names: Sequence[str], spec: RegressionSpec) -> list[int]:
    """Structural terms first (bins with their interactions, measure main
    effect, controls), then the intercept and fixed-effect dummies."""
    pos = {nm: i for i, nm in enumerate(names)}
    order: list[int] = []
    for b in EVENT_BINS:
        if b in pos:
            order.append(pos[b])
        if spec.z_measure is not None:
            inter = f"{b}_x_{spec.z_measure}"
            if inter in pos:
                order.append(pos[inter])
    if spec.z_measure is not None and f"z_{spec.z_measure}" in pos:
        order.append(pos[f"z_{spec.z_measure}"])
    for c in spec.controls:
        if c in pos:
            order.append(pos[c])
    seen = set(order)
    order.extend(i for i in range(len(names)) if i not in seen)
    return order
