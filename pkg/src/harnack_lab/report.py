"""CSV and figure emission for experiment reports.

CSV is the contract: floats at 17 significant digits, a ``# seed=`` comment
line, deterministic row order, no timestamps.  Figures (SVG via matplotlib's
Agg backend) are optional convenience renderings written alongside the CSV.
"""

from __future__ import annotations

from .configio import fmt17


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return fmt17(v)
    return str(v)


def write_csv(path, columns, rows, comments=()) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def harnack_rows(report):
    cols = ["scale", "member", "ratio", "sup_u1", "inf_u2", "floor_hit", "wbmo_2r"]
    rows = [(m.scale, m.index, m.ratio, m.sup_u1, m.inf_u2, m.floor_hit,
             report.wbmo.get(m.scale, float("nan")))
            for m in report.members]
    for scale in sorted(report.per_scale_max):
        rows.append((scale, "max", report.per_scale_max[scale],
                     float("nan"), float("nan"), False,
                     report.wbmo.get(scale, float("nan"))))
    return cols, rows


def hoelder_rows(report):
    cols = ["member", "tau", "oscillation", "alpha_raw", "alpha", "contraction",
            "seminorm_max", "skipped"]
    rows = []
    for m in report.members:
        for tau, osc in zip(m.taus, m.oscillations):
            rows.append((m.index, tau, osc, m.alpha_raw, m.alpha,
                         m.contraction, m.seminorm_max, m.skipped))
    return cols, rows


def growth_rows(report):
    cols = ["kind", "delta", "member", "fraction", "value", "sup_small", "sup_full"]
    rows = [(report.kind, m.delta, m.index, m.fraction, m.value,
             m.sup_small, m.sup_full) for m in report.members]
    return cols, rows


def propup_rows(report):
    cols = ["member", "rho_frac", "quotient", "gamma_fit"]
    rows = []
    for m in report.members:
        for frac in sorted(m.quotients, reverse=True):
            rows.append((m.index, frac, m.quotients[frac], m.gamma_fit))
    return cols, rows


def liouville_rows(report):
    cols = ["member", "k", "oscillation", "c_fit"]
    rows = []
    for m in report.members:
        for k, osc in enumerate(m.oscillations):
            rows.append((m.index, k, osc, m.c_fit))
    return cols, rows


def covering_rows(report):
    cols = ["n", "delta0", "K0", "K1", "mu_gamma", "mu_E", "mu_hatE",
            "mu_gamma_minus_E", "q0_required", "q1_required",
            "passed_q0", "passed_q1", "column_inequality_ok",
            "candidate_count", "admitted_count", "selected_count"]
    rows = [(report.n, report.delta0, report.K0, report.K1, report.mu_gamma,
             report.mu_E, report.mu_hatE, report.mu_gamma_minus_E,
             report.q0_required, report.q1_required, report.passed_q0,
             report.passed_q1, report.column_inequality_ok,
             report.candidate_count, report.admitted_count,
             len(report.selected_cylinders))]
    return cols, rows


def covering_summary(report) -> str:
    status = "PASS" if report.passed() else "FAIL"
    return (f"[{status}] mu(Gamma)={report.mu_gamma:.6g} mu(E)={report.mu_E:.6g} "
            f"mu(E-hat)={report.mu_hatE:.6g} mu(Gamma\\E)={report.mu_gamma_minus_E:.3g}; "
            f"need mu(E) >= {report.q0_required:.8g} mu(Gamma) "
            f"[{'ok' if report.passed_q0 else 'VIOLATED'}], "
            f"mu(E-hat) >= {report.q1_required:.8g} mu(E) "
            f"[{'ok' if report.passed_q1 else 'VIOLATED'}], "
            f"per-column interval inequality "
            f"[{'ok' if report.column_inequality_ok else 'VIOLATED'}]; "
            f"{report.admitted_count}/{report.candidate_count} admitted, "
            f"{len(report.selected_cylinders)} selected disjoint")


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------


def _axes(title, xlabel, ylabel):
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    import matplotlib.pyplot as plt

    plt.close(fig)


def plot_harnack(report, path) -> None:
    fig, ax = _axes("Harnack ratios", "member", "sup U1 / inf U2")
    for scale in sorted({m.scale for m in report.members}):
        ms = [m for m in report.members if m.scale == scale]
        ax.plot([m.index for m in ms], [m.ratio for m in ms], "o-",
                label=f"r={scale:g}")
    ax.axhline(1.0, color="gray", lw=0.8)
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_decay(report, path, title="oscillation decay") -> None:
    fig, ax = _axes(title, "scale", "oscillation")
    for m in report.members:
        if getattr(m, "skipped", False):
            continue
        taus = getattr(m, "taus", None)
        xs = taus if taus is not None else [4.0 ** k for k in
                                            range(len(m.oscillations))]
        ys = m.oscillations
        pos = [(x, y) for x, y in zip(xs, ys) if y > 0]
        if pos:
            ax.loglog([x for x, _ in pos], [y for _, y in pos], "o-",
                      label=f"m{m.index}")
    ax.legend(fontsize=7)
    _save(fig, path)


def plot_growth(reports, path) -> None:
    fig, ax = _axes("growth conclusions", "delta", "value")
    deltas = [r.delta for r in reports]
    meds = [sorted(r.values())[len(r.values()) // 2] for r in reports]
    ax.plot(deltas, meds, "s-")
    _save(fig, path)


def plot_covering(report, path) -> None:
    fig, ax = _axes("covering measures", "", "mu")
    names = ["Gamma", "E", "q0*Gamma", "E-hat", "q1*E"]
    vals = [report.mu_gamma, report.mu_E, report.q0_required * report.mu_gamma,
            report.mu_hatE, report.q1_required * report.mu_E]
    ax.bar(names, vals)
    _save(fig, path)
