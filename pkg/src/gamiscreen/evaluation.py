"""Discrimination, calibration, model comparison and agreement statistics.

ROC curves come from a threshold sweep over distinct scores (ties grouped);
the AUC is computed twice, by trapezoid and by tie-corrected pair counting,
and the two are asserted equal. The AUC confidence interval uses DeLong's
nonparametric variance estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateAgreementError,
    IncomparableModelsError,
    InputError,
    OneClassError,
    TooFewRecordsError,
)

Z95 = 1.96


# ---------------------------------------------------------------------------
# ROC / AUC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RocCurve:
    """Threshold sweep: (fpr, tpr) from (0,0) to (1,1), plus AUC and CI."""

    points: tuple[tuple[float, float], ...]
    thresholds: tuple[float, ...]  # parallel to points; +inf for (0, 0)
    auc: float
    auc_ci_low: float
    auc_ci_high: float
    n_pos: int
    n_neg: int


def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    z = x[order]
    n = len(x)
    ranks = np.zeros(n)
    i = 0
    while i < n:
        j = i
        while j < n and z[j] == z[i]:
            j += 1
        ranks[i:j] = 0.5 * (i + j - 1) + 1
        i = j
    out = np.empty(n)
    out[order] = ranks
    return out


def _delong_variance(scores: np.ndarray, labels: np.ndarray) -> float:
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    m, n = len(pos), len(neg)
    tx = _midranks(pos)
    ty = _midranks(neg)
    tz = _midranks(np.concatenate([pos, neg]))
    v01 = (tz[:m] - tx) / n
    v10 = 1.0 - (tz[m:] - ty) / m
    s01 = v01.var(ddof=1) if m > 1 else 0.0
    s10 = v10.var(ddof=1) if n > 1 else 0.0
    return s01 / m + s10 / n


def roc_auc(scores, labels) -> RocCurve:
    """ROC curve with trapezoidal AUC and a DeLong 95% CI.

    Scores with identical values are grouped at a single threshold, so
    the curve is invariant to any strictly increasing score transform.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InputError("scores and labels must be equal-length 1-d arrays")
    if not np.isin(labels, (0.0, 1.0)).all():
        raise InputError("labels must be binary (0/1)")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise OneClassError()

    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    distinct = np.r_[np.where(np.diff(s))[0], len(s) - 1]  # last index of each tie group
    tp = np.cumsum(y)[distinct]
    fp = np.cumsum(1 - y)[distinct]
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = (math.inf,) + tuple(float(v) for v in s[distinct])

    auc_trap = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))

    # Independent tie-corrected pair-counting AUC via midranks.
    ranks = _midranks(scores)
    auc_pairs = float((ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))
    assert abs(auc_trap - auc_pairs) < 1e-12, (auc_trap, auc_pairs)

    var = _delong_variance(scores, labels)
    half = Z95 * math.sqrt(max(var, 0.0))
    return RocCurve(
        points=tuple(zip(fpr.tolist(), tpr.tolist())),
        thresholds=thresholds,
        auc=auc_trap,
        auc_ci_low=max(0.0, auc_trap - half),
        auc_ci_high=min(1.0, auc_trap + half),
        n_pos=n_pos,
        n_neg=n_neg,
    )


def roc_csv(curve: RocCurve) -> str:
    lines = ["threshold,fpr,tpr"]
    for t, (f, tp) in zip(curve.thresholds, curve.points):
        tt = "inf" if math.isinf(t) else repr(t)
        lines.append(f"{tt},{f!r},{tp!r}")
    return "\n".join(lines) + "\n"


def roc_svg(curve: RocCurve, width: int = 480, height: int = 480) -> str:
    """Sensitivity vs 1-specificity with a diagonal reference line."""
    pad = 50
    w, h = width - 2 * pad, height - 2 * pad

    def px(f, t):
        return pad + f * w, pad + (1.0 - t) * h

    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in (px(f, t) for f, t in curve.points))
    x0, y0 = px(0, 0)
    x1, y1 = px(1, 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{pad}" y="{pad}" width="{w}" height="{h}" fill="none" stroke="black"/>',
        f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
        'stroke="grey" stroke-dasharray="4 4"/>',
        f'<polyline points="{pts}" fill="none" stroke="crimson" stroke-width="1.5"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle">1 - Specificity</text>',
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {height / 2:.0f})">Sensitivity</text>',
        f'<text x="{width / 2:.0f}" y="30" text-anchor="middle">'
        f'ROC (AUC = {curve.auc:.3f}, 95% CI {curve.auc_ci_low:.3f}-{curve.auc_ci_high:.3f})</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Model comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonEntry:
    index: int        # position in the input list
    auc: float
    aic: float


@dataclass(frozen=True)
class ModelComparison:
    ranked: tuple[ComparisonEntry, ...]  # best first
    conflict: bool                       # AUC and AIC orderings disagree somewhere

    @property
    def selected(self) -> ComparisonEntry:
        return self.ranked[0]


def aic_compare(models_and_rocs) -> ModelComparison:
    """Rank candidate models: higher AUC first, lower AIC as tie-break.

    `models_and_rocs` is a sequence of (FittedModel, RocCurve) pairs all
    fitted on the same observations. Flags a conflict whenever one model
    beats another on AUC but loses on AIC.
    """
    entries = []
    n_obs = None
    for i, (model, roc) in enumerate(models_and_rocs):
        if model.aic is None or model.n_obs is None:
            raise IncomparableModelsError(f"model {i} carries no AIC/n_obs")
        if n_obs is None:
            n_obs = model.n_obs
        elif model.n_obs != n_obs:
            raise IncomparableModelsError(
                f"models fitted on different sample sizes: {n_obs} vs {model.n_obs}")
        entries.append(ComparisonEntry(index=i, auc=roc.auc, aic=float(model.aic)))
    if not entries:
        raise IncomparableModelsError("no models to compare")

    ranked = tuple(sorted(entries, key=lambda e: (-e.auc, e.aic)))
    conflict = any(
        (a.auc > b.auc and a.aic > b.aic) or (b.auc > a.auc and b.aic > a.aic)
        for i, a in enumerate(entries) for b in entries[i + 1:]
    )
    return ModelComparison(ranked=ranked, conflict=conflict)


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Stratum:
    label: str          # "Q1", "Q1-Q2", ...
    n_obs: int
    n_pos: int
    observed_rate: float
    mean_predicted: float


@dataclass(frozen=True)
class CalibrationReport:
    strata: tuple[Stratum, ...]
    merged: tuple[str, ...]  # labels of strata produced by merging quartiles


def calibration_strata(predicted, labels, n_strata: int = 4,
                       min_positives: int = 5) -> CalibrationReport:
    """Observed vs mean predicted event rates per predicted-probability quartile.

    Records sharing a predicted value are never split across strata, and
    adjacent strata are merged while any stratum holds fewer than
    `min_positives` positive labels.
    """
    predicted = np.asarray(predicted, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if predicted.shape != labels.shape or predicted.ndim != 1:
        raise InputError("predicted and labels must be equal-length 1-d arrays")
    n = len(predicted)
    if n < n_strata:
        raise TooFewRecordsError(f"need at least {n_strata} records, got {n}")

    edges = np.quantile(predicted, [k / n_strata for k in range(1, n_strata)])
    # side='left': a value equal to an edge falls in the lower stratum, so
    # tied values always land together.
    bin_of = np.searchsorted(edges, predicted, side="left")

    groups: list[tuple[list[int], np.ndarray]] = []  # (quartile indices, member mask)
    for q in range(n_strata):
        mask = bin_of == q
        if not mask.any():
            if groups:
                groups[-1][0].append(q)      # tie collapse: fold into predecessor
            else:
                groups.append(([q], mask))   # leading empty; absorbed below
            continue
        if groups and groups[-1][1].sum() == 0:
            prev_q, _ = groups.pop()
            groups.append((prev_q + [q], mask))
        else:
            groups.append(([q], mask))
    groups = [(qs, m) for qs, m in groups if m.sum() > 0]

    merged_from_ties = [qs for qs, _ in groups if len(qs) > 1]

    # Merge low-event strata forward (into the next stratum; backward for the last).
    while len(groups) > 1:
        counts = [labels[m].sum() for _, m in groups]
        low = next((i for i, c in enumerate(counts) if c < min_positives), None)
        if low is None:
            break
        j = low + 1 if low + 1 < len(groups) else low - 1
        a, b = sorted((low, j))
        qs = groups[a][0] + groups[b][0]
        mask = groups[a][1] | groups[b][1]
        groups[a:b + 1] = [(qs, mask)]

    def label_of(qs):
        qs = sorted(qs)
        if len(qs) == 1:
            return f"Q{qs[0] + 1}"
        return f"Q{qs[0] + 1}-Q{qs[-1] + 1}"

    strata = []
    merged = []
    for qs, mask in groups:
        s = Stratum(
            label=label_of(qs),
            n_obs=int(mask.sum()),
            n_pos=int(labels[mask].sum()),
            observed_rate=float(labels[mask].mean()),
            mean_predicted=float(predicted[mask].mean()),
        )
        strata.append(s)
        if len(qs) > 1:
            merged.append(s.label)
    return CalibrationReport(strata=tuple(strata), merged=tuple(merged))


def calibration_text(report: CalibrationReport) -> str:
    rows = [("Stratum", "N", "Observed", "Predicted")]
    for s in report.strata:
        rows.append((s.label, str(s.n_obs), f"{s.observed_rate:.3f}", f"{s.mean_predicted:.3f}"))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    if report.merged:
        lines.append(f"(merged quartiles: {', '.join(report.merged)})")
    return "\n".join(lines) + "\n"


def calibration_to_dict(report: CalibrationReport) -> dict:
    return {
        "strata": [
            {
                "label": s.label,
                "n_obs": s.n_obs,
                "n_pos": s.n_pos,
                "observed_rate": s.observed_rate,
                "mean_predicted": s.mean_predicted,
            }
            for s in report.strata
        ],
        "merged": list(report.merged),
    }


# ---------------------------------------------------------------------------
# Inter-rater agreement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KappaResult:
    kappa: float
    standard_error: float
    ci_low: float
    ci_high: float
    observed_agreement: float
    expected_agreement: float


def cohen_kappa(rater_a, rater_b) -> KappaResult:
    """Two-rater Cohen's kappa with the large-sample standard error.

    SE = sqrt(po (1 - po) / (n (1 - pe)^2)); 95% CI clamped to [-1, 1].
    """
    a = list(rater_a)
    b = list(rater_b)
    if len(a) != len(b):
        raise InputError("rating vectors differ in length")
    n = len(a)
    if n < 2:
        raise InputError("need at least 2 rated items")

    categories = sorted(set(a) | set(b), key=str)
    idx = {c: i for i, c in enumerate(categories)}
    k = len(categories)
    table = np.zeros((k, k))
    for ai, bi in zip(a, b):
        table[idx[ai], idx[bi]] += 1

    po = float(np.trace(table)) / n
    pe = float(table.sum(axis=1) @ table.sum(axis=0)) / n ** 2
    if pe >= 1.0:
        raise DegenerateAgreementError()

    kappa = (po - pe) / (1.0 - pe)
    se = math.sqrt(po * (1.0 - po) / (n * (1.0 - pe) ** 2))
    return KappaResult(
        kappa=kappa,
        standard_error=se,
        ci_low=max(-1.0, kappa - Z95 * se),
        ci_high=min(1.0, kappa + Z95 * se),
        observed_agreement=po,
        expected_agreement=pe,
    )


def kappa_text(result: KappaResult) -> str:
    return (
        f"kappa              {result.kappa:.3f}\n"
        f"standard error     {result.standard_error:.3f}\n"
        f"95% CI             {result.ci_low:.3f} - {result.ci_high:.3f}\n"
        f"observed agreement {result.observed_agreement:.3f}\n"
        f"expected agreement {result.expected_agreement:.3f}\n"
    )


def kappa_to_dict(result: KappaResult) -> dict:
    return {
        "kappa": result.kappa,
        "standard_error": result.standard_error,
        "ci_low": result.ci_low,
        "ci_high": result.ci_high,
        "observed_agreement": result.observed_agreement,
        "expected_agreement": result.expected_agreement,
    }
