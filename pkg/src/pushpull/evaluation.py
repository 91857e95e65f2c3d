"""Effort metrics over trial logs: force trimming, action segmentation, per-action
statistics, prediction lead time and Welch's unequal-variance t-test."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .metrics import ClassificationReport
from .skeleton import IntentionClass
from .synth import V_DEAD

TRIM_THRESHOLD = 15.0
MERGE_GAP = 0.2
EXTEND = 0.25
LEAD_WINDOW = 3.0

LOG_COLUMNS = ("t", "box_x", "box_v", "f_h_x", "f_h_norm", "f_r_x", "f_d_x", "u_x", "intent_raw", "intent_filtered")


class EvaluationError(ValueError):
    pass


@dataclass
class TrialLog:
    t: np.ndarray
    box_x: np.ndarray
    box_v: np.ndarray
    f_h_x: np.ndarray
    f_h_norm: np.ndarray
    f_r_x: np.ndarray
    f_d_x: np.ndarray
    u_x: np.ndarray
    intent_raw: np.ndarray
    intent_filtered: np.ndarray
    condition: str = "dry"
    scenario: str = ""
    labels: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.t)
        for name in LOG_COLUMNS:
            if len(getattr(self, name)) != n:
                raise EvaluationError(f"series {name} has length {len(getattr(self, name))}, expected {n}")
        if self.condition not in ("dry", "assisted"):
            raise EvaluationError(f"unknown condition {self.condition!r}")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(np.median(np.diff(self.t))) if len(self.t) > 1 else 0.01


def write_trial_log(log: TrialLog, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        cols = [getattr(log, c) for c in LOG_COLUMNS]
        for row in zip(*cols):
            w.writerow(
                [f"{row[0]:.2f}"]
                + [f"{v:.9g}" for v in row[1:8]]
                + [str(int(row[8])), str(int(row[9]))]
            )
    meta = {"condition": log.condition, "scenario": log.scenario}
    path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    return path


def read_trial_log(path, condition: str | None = None, scenario: str | None = None) -> TrialLog:
    path = Path(path)
    data = np.genfromtxt(path, delimiter=",", names=True, ndmin=1)
    if data.dtype.names != LOG_COLUMNS:
        raise EvaluationError(f"{path}: unexpected header {data.dtype.names}")
    meta_path = path.with_suffix(".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    cols = {c: np.asarray(data[c], dtype=float) for c in LOG_COLUMNS}
    for c in ("intent_raw", "intent_filtered"):
        cols[c] = cols[c].astype(int)
    return TrialLog(
        **cols,
        condition=condition or meta.get("condition", "dry"),
        scenario=scenario if scenario is not None else meta.get("scenario", ""),
    )


# -- trimming and segmentation --------------------------------------------


def trim_mask(f_h_norm: np.ndarray, threshold: float = TRIM_THRESHOLD) -> np.ndarray:
    """Samples kept for effort statistics: norm at or above the threshold."""
    return np.asarray(f_h_norm) >= threshold


def trim_forces(log: TrialLog, threshold: float = TRIM_THRESHOLD) -> np.ma.MaskedArray:
    norm = np.asarray(log.f_h_norm, dtype=float)
    return np.ma.masked_array(norm, mask=~trim_mask(norm, threshold))


@dataclass(frozen=True)
class ActionRecord:
    kind: IntentionClass
    start: float  # first moving sample
    end: float  # last moving sample
    mean_force: float
    cumulative_force: float
    peak_force: float
    n_trimmed: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.name
        return d


def _runs(flags: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (start, end) index pairs of True runs."""
    padded = np.concatenate([[False], flags, [False]]).astype(int)
    d = np.diff(padded)
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1) - 1))


def motion_runs(t: np.ndarray, box_v: np.ndarray, v_dead: float = V_DEAD, merge_gap: float = MERGE_GAP):
    """Runs of |v| > v_dead, same-direction runs closer than ``merge_gap`` joined."""
    runs = []
    for direction in (1, -1):
        for s, e in _runs(direction * box_v > v_dead):
            runs.append([int(s), int(e), direction])
    runs.sort()
    merged: list[list[int]] = []
    for s, e, d in runs:
        if merged and merged[-1][2] == d and t[s] - t[merged[-1][1]] < merge_gap:
            merged[-1][1] = e
        else:
            merged.append([s, e, d])
    return [(s, e, d) for s, e, d in merged]


def _stats(t, norm, keep, lo, hi):
    sel = (t >= lo - 1e-9) & (t <= hi + 1e-9)
    kept = norm[sel & keep]
    if kept.size == 0:
        return 0.0, 0.0, 0.0, 0
    cum = float(np.trapezoid(np.where(keep[sel], norm[sel], 0.0), t[sel]))
    return float(kept.mean()), cum, float(kept.max()), int(kept.size)


def segment_actions(
    log: TrialLog,
    v_dead: float = V_DEAD,
    threshold: float = TRIM_THRESHOLD,
    extend: float = EXTEND,
) -> list[ActionRecord]:
    t = np.asarray(log.t, dtype=float)
    norm = np.asarray(log.f_h_norm, dtype=float)
    keep = trim_mask(norm, threshold)
    records = []
    for s, e, d in motion_runs(t, np.asarray(log.box_v, dtype=float), v_dead):
        # pull moves the box towards +x, push towards -x
        kind = IntentionClass.PULL if d > 0 else IntentionClass.PUSH
        mean, cum, peak, n = _stats(t, norm, keep, t[s] - extend, t[e] + extend)
        records.append(ActionRecord(kind, float(t[s]), float(t[e]), mean, cum, peak, n))
    return records


@dataclass(frozen=True)
class EffortSummary:
    n: int
    mean_force: float
    mean_force_std: float
    cumulative_force: float
    cumulative_force_std: float

    def to_dict(self) -> dict:
        return asdict(self)


def effort_stats(records: list[ActionRecord]) -> EffortSummary:
    if not records:
        raise EvaluationError("no action records")
    means = np.array([r.mean_force for r in records])
    cums = np.array([r.cumulative_force for r in records])
    ddof = 1 if len(records) > 1 else 0
    return EffortSummary(len(records), float(means.mean()), float(means.std(ddof=ddof)),
                         float(cums.mean()), float(cums.std(ddof=ddof)))


# -- lead time ------------------------------------------------------------


@dataclass
class LeadTimes:
    leads: list[float] = field(default_factory=list)
    skipped: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.leads)) if self.leads else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.leads, ddof=1)) if len(self.leads) > 1 else 0.0


def lead_time(
    log: TrialLog,
    records: list[ActionRecord] | None = None,
    force_threshold: float = TRIM_THRESHOLD,
    window: float = LEAD_WINDOW,
    extend: float = EXTEND,
) -> LeadTimes:
    """Seconds by which the filtered intention preceded the human force onset, per action.

    The onset is the first sample in the extended action window whose force norm
    reaches the threshold. The intention time is the start of the matching run of
    the filtered intention in force at the onset, limited to ``window`` seconds
    back; if none is in force, the first match after the onset within the action
    (a negative lead).
    """
    if records is None:
        records = segment_actions(log, threshold=force_threshold, extend=extend)
    t = np.asarray(log.t, dtype=float)
    norm = np.asarray(log.f_h_norm, dtype=float)
    intent = np.asarray(log.intent_filtered, dtype=int)
    out = LeadTimes()
    for rec in records:
        in_win = np.flatnonzero((t >= rec.start - extend - 1e-9) & (t <= rec.end + extend + 1e-9) & (norm >= force_threshold))
        if in_win.size == 0:
            out.skipped += 1
            continue
        k = in_win[0]
        onset = t[k]
        match = intent == int(rec.kind)
        if match[k]:
            j = k
            while j > 0 and match[j - 1] and t[j - 1] >= onset - window - 1e-9:
                j -= 1
            out.leads.append(float(onset - t[j]))
        else:
            after = np.flatnonzero(match[k:] & (t[k:] <= rec.end + 1e-9))
            if after.size == 0:
                out.skipped += 1
                continue
            out.leads.append(float(onset - t[k + after[0]]))
    return out


# -- Welch t-test ---------------------------------------------------------


def _betacf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 1e-15) -> float:
    """Continued fraction for the incomplete beta function, modified Lentz method."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    # the fraction converges fast on this side of the mean; use symmetry otherwise
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, dof: float) -> float:
    """P(|T| >= |t|) for Student's t with ``dof`` degrees of freedom."""
    if not math.isfinite(t):
        return 0.0
    t2 = t * t
    if t2 < dof:
        # dof / (dof + t^2) rounds towards 1 for small t; use the complement
        p = 1.0 - regularized_incomplete_beta(0.5, dof / 2.0, t2 / (dof + t2))
    else:
        p = regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t2))
    return min(1.0, max(0.0, p))


@dataclass(frozen=True)
class WelchResult:
    t: float
    dof: float
    p: float

    def to_dict(self) -> dict:
        return asdict(self)


def welch_t_test(sample_a, sample_b) -> WelchResult:
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise EvaluationError("each sample needs at least two values")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    if va + vb == 0:
        raise EvaluationError("both samples have zero variance")
    t = (a.mean() - b.mean()) / math.sqrt(va + vb)
    dof = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    return WelchResult(float(t), float(dof), t_two_sided_p(float(t), float(dof)))


# -- reports --------------------------------------------------------------


@dataclass
class MetricsReport:
    actions: dict[str, list[ActionRecord]]
    effort: dict[str, EffortSummary]
    welch_mean: WelchResult | None = None
    welch_cumulative: WelchResult | None = None
    lead: LeadTimes | None = None
    classification: ClassificationReport | None = None

    def to_dict(self) -> dict:
        return {
            "actions": {c: [r.to_dict() for r in recs] for c, recs in self.actions.items()},
            "effort": {c: s.to_dict() for c, s in self.effort.items()},
            "welch_mean_force": self.welch_mean.to_dict() if self.welch_mean else None,
            "welch_cumulative_force": self.welch_cumulative.to_dict() if self.welch_cumulative else None,
            "lead_time": None
            if self.lead is None
            else {"mean": self.lead.mean, "std": self.lead.std, "n": len(self.lead.leads),
                  "skipped": self.lead.skipped, "values": self.lead.leads},
            "classification": self.classification.to_dict() if self.classification else None,
        }


def compare_conditions(dry: list[TrialLog], assisted: list[TrialLog]) -> MetricsReport:
    """Per-action effort for each condition and the dry-vs-assisted significance tests."""
    actions = {
        "dry": [r for log in dry for r in segment_actions(log)],
        "assisted": [r for log in assisted for r in segment_actions(log)],
    }
    effort = {c: effort_stats(recs) for c, recs in actions.items() if recs}
    report = MetricsReport(actions, effort)
    if len(actions["dry"]) >= 2 and len(actions["assisted"]) >= 2:
        report.welch_mean = welch_t_test([r.mean_force for r in actions["assisted"]],
                                         [r.mean_force for r in actions["dry"]])
        report.welch_cumulative = welch_t_test([r.cumulative_force for r in actions["assisted"]],
                                               [r.cumulative_force for r in actions["dry"]])
    if assisted:
        lead = LeadTimes()
        for log in assisted:
            part = lead_time(log)
            lead.leads.extend(part.leads)
            lead.skipped += part.skipped
        report.lead = lead
    return report


def write_report(report: MetricsReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return path


def write_action_table(report: MetricsReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["condition", "kind", "mean_N", "cumulative_Ns"])
        for condition, recs in report.actions.items():
            for r in recs:
                w.writerow([condition, r.kind.name, f"{r.mean_force:.6f}", f"{r.cumulative_force:.6f}"])
    return path
