"""Human-readable tables and figure-data files for fit results and events."""

from __future__ import annotations

import csv
from collections import Counter
from typing import Iterable

from .panelfit import FitResult, effect_percent
from .threatscan import DUAL_BINS, ENTRY_BINS, EVENT_BINS, PRE_BINS, ThreatEvent

FIT_COLUMNS = ("TERM", "ESTIMATE", "SE", "STARS")

TERM_LABELS = {
    "pre8": "Before dual presence (t0-8)",
    "pre7": "Before dual presence (t0-7)",
    "pre6": "Before dual presence (t0-6)",
    "pre5": "Before dual presence (t0-5)",
    "pre4": "Before dual presence (t0-4)",
    "pre3": "Before dual presence (t0-3)",
    "pre2": "Before dual presence (t0-2)",
    "pre1": "Before dual presence (t0-1)",
    "dual0": "Start of dual presence (t0)",
    "dual1": "During dual presence (t0+1)",
    "dual2": "During dual presence (t0+2)",
    "dual3plus": "During dual presence (t0+3 to t0+12)",
    "entry0": "Entry (te)",
    "entry1plus": "After entry (te+1 to te+2)",
    "entry3plus": "After entry (te+3 to te+12)",
    "distance_100mi": "Distance (100 miles)",
    "distance_100mi_sq": "Distance squared",
    "temp_diff_f": "Temperature differential (F)",
}


def write_fit_csv(result: FitResult, path) -> None:
    """Fit results as CSV with a metadata comment block.

    Estimates and standard errors are written with full precision so the
    file re-parses to exactly the fitted values.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# outcome={result.spec.outcome}\n")
        fh.write(f"# covariance={result.spec.covariance}\n")
        fh.write(f"# z_measure={result.spec.z_measure or ''}\n")
        fh.write(f"# controls={','.join(result.spec.controls)}\n")
        fh.write(f"# weights=db1b_passengers\n")
        fh.write(f"# solver={result.solver}\n")
        fh.write(f"# n={result.nobs}\n")
        fh.write(f"# k={result.nparams}\n")
        fh.write(f"# r_squared={result.r_squared!r}\n")
        fh.write(f"# dropped_columns={';'.join(result.dropped_columns)}\n")
        writer = csv.writer(fh)
        writer.writerow(FIT_COLUMNS)
        for name in result.names:
            coef = result.coefficients[name]
            writer.writerow([name, repr(coef.estimate), repr(coef.se), coef.stars])


def read_fit_csv(path) -> tuple[dict, dict]:
    """Parse a fit CSV back into (term -> (estimate, se, stars), metadata)."""
    metadata: dict[str, str] = {}
    terms: dict[str, tuple[float, float, str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                metadata[key.strip()] = value
            else:
                lines.append(line)
    reader = csv.DictReader(lines)
    for row in reader:
        terms[row["TERM"]] = (float(row["ESTIMATE"]), float(row["SE"]), row["STARS"])
    return terms, metadata


def _cell(estimate: float, se: float, stars: str) -> str:
    return f"{estimate:.3f}{stars} ({se:.3f})"


def render_table(result: FitResult) -> str:
    """Text table: pre rows, threat rows, entry rows (each followed by its
    interaction when present), the measure main effect, controls, the
    fixed-effects note, R-squared, and N."""
    lines = [f"outcome: {result.spec.outcome}   se: {result.spec.covariance}"]
    lines.append("-" * 60)

    def emit(term: str, label: str | None = None):
        coef = result.coefficients.get(term)
        if coef is None:
            return
        label = label or TERM_LABELS.get(term, term)
        lines.append(f"{label:<42}{_cell(coef.estimate, coef.se, coef.stars)}")

    for block in (PRE_BINS, DUAL_BINS, ENTRY_BINS):
        for b in block:
            emit(b)
            if result.spec.z_measure is not None:
                emit(f"{b}_x_{result.spec.z_measure}", f"  x {result.spec.z_measure}")
        lines.append("-" * 60)
    if result.spec.z_measure is not None:
        emit(f"z_{result.spec.z_measure}", f"network measure ({result.spec.z_measure})")
    for c in result.spec.controls:
        emit(c)
    lines.append("Carrier-route / quarter fixed effects: yes")
    lines.append(f"R-squared: {result.r_squared:.3f}")
    lines.append(f"N: {result.nobs}")
    if result.dropped_columns:
        lines.append(f"dropped collinear columns: {', '.join(result.dropped_columns)}")
    return "\n".join(lines) + "\n"


def write_table_txt(result: FitResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_table(result))


def write_event_curve_csv(terms: dict, path) -> None:
    """Percent-change curve from bin coefficients: 100*(exp(b)-1) per bin."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["BIN", "PERCENT_CHANGE"])
        for b in EVENT_BINS:
            if b in terms:
                estimate = terms[b][0] if isinstance(terms[b], tuple) else terms[b]
                writer.writerow([b, repr(effect_percent(estimate))])


def write_threat_time_histogram_csv(events: Iterable[ThreatEvent], path) -> None:
    """Counts of threat starts (t0) by calendar quarter."""
    counts = Counter(ev.t_0 for ev in events)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["QUARTER", "COUNT"])
        for q in sorted(counts):
            writer.writerow([str(q), counts[q]])


def write_threat_gap_histogram_csv(events: Iterable[ThreatEvent], path) -> None:
    """Counts of the threat-to-entry gap (te - t0) in quarters."""
    counts = Counter(ev.t_e - ev.t_0 for ev in events)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["GAP_QUARTERS", "COUNT"])
        for gap in sorted(counts):
            writer.writerow([gap, counts[gap]])
