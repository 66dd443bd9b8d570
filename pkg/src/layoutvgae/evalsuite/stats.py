"""Two-group Welch t-tests and one-way ANOVA over evaluation reports."""
from __future__ import annotations

import itertools
from collections import OrderedDict

import numpy as np
from scipy import stats as sps

from .metrics import EvalReport


def two_group_ttest(values_a, values_b):
    """Welch's unequal-variance t statistic and two-sided p-value."""
    a = np.asarray(values_a, dtype=np.float64)
    b = np.asarray(values_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each group needs at least 2 values")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0 and vb == 0:
        raise ValueError("t statistic undefined: zero variance in both groups")
    se2 = va / len(a) + vb / len(b)
    t = (a.mean() - b.mean()) / np.sqrt(se2)
    df = se2 ** 2 / ((va / len(a)) ** 2 / (len(a) - 1) + (vb / len(b)) ** 2 / (len(b) - 1))
    p = 2.0 * sps.t.sf(abs(t), df)
    return float(t), float(min(p, 1.0))


def one_way_anova(groups):
    """Between/within mean-square ratio F and its upper-tail p-value."""
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(groups) < 2 or any(len(g) < 2 for g in groups):
        raise ValueError("need at least 2 groups of at least 2 values")
    pooled = np.concatenate(groups)
    grand = pooled.mean()
    k, N = len(groups), len(pooled)
    ss_between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    if ss_within == 0:
        raise ValueError("F undefined: zero within-group variance")
    F = (ss_between / (k - 1)) / (ss_within / (N - k))
    return float(F), float(sps.f.sf(F, k - 1, N - k))


def _safe(fn, *args):
    try:
        return fn(*args)
    except ValueError:
        return None, None


def build_tables(reports, groupby, metrics=EvalReport.METRICS) -> dict:
    """Summaries keyed by toggle, in the layout of a toggle-vs-metric results table.

    Each report is a dict holding the metric values plus a ``toggles`` mapping.
    For every toggle in ``groupby`` the reports are split by its value; each
    group lists its size and per-metric mean, and when exactly two groups
    exist a Welch t and p are given per metric (first group minus second, in
    sorted value order). The ANOVA block compares every combination of the
    ``groupby`` values that occurs.
    """
    groupby = list(groupby)
    for r in reports:
        missing = [g for g in groupby if g not in r.get("toggles", {})]
        if missing:
            raise ValueError(f"report lacks toggles {missing}")
    out = {"n_reports": len(reports), "metrics": list(metrics), "toggles": OrderedDict()}
    for toggle in groupby:
        by_value = OrderedDict()
        for value in sorted({r["toggles"][toggle] for r in reports}, key=repr):
            by_value[value] = [r for r in reports if r["toggles"][toggle] == value]
        groups = OrderedDict(
            (str(v), {"n": len(rs), "mean": {m: float(np.mean([r[m] for r in rs])) for m in metrics}})
            for v, rs in by_value.items())
        tests = OrderedDict()
        values = list(by_value.values())
        for m in metrics:
            if len(values) == 2:
                t, p = _safe(two_group_ttest, [r[m] for r in values[0]], [r[m] for r in values[1]])
            else:
                t, p = None, None
            tests[m] = {"t": t, "p": p}
        out["toggles"][toggle] = {"groups": groups, "tests": tests}

    combos = OrderedDict()
    for r in reports:
        key = "-".join(f"{g}={r['toggles'][g]}" for g in groupby)
        combos.setdefault(key, []).append(r)
    anova = OrderedDict()
    for m in metrics:
        F, p = _safe(one_way_anova, [[r[m] for r in rs] for rs in combos.values()])
        anova[m] = {"F": F, "p": p}
    out["anova"] = {"groups": {k: len(v) for k, v in combos.items()}, "tests": anova}
    return out


def toggle_grid(values: dict) -> list:
    """All combinations of ``{toggle: [values]}`` as dicts, in key order."""
    keys = list(values)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(values[k] for k in keys))]
