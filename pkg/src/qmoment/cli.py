"""Command-line reports.

Every report is written as JSON ``{"config", "results", "diagnostics"}``
with all numbers as decimal strings at the working precision and exact
rationals as ``"p/q"``, or as CSV with one row per ``n``.  Output depends
only on the flags, so identical invocations give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import dataclass
from fractions import Fraction

from . import criteria, moments, orthopoly, qbessel
from .errors import QMomentError, ValidationError
from .qcore import QContext, as_fraction, to_mpf

FOURIER_WINDOW = (-8, 8)
GRAM_DEGREE = 12
GRAM_WINDOW_TOL = 1e-40
DIRECT_LIMIT = 10  # reproduce-p3 cross-checks direct sums up to this n
PROOF_LAMBDA = 1


@dataclass(frozen=True)
class RunConfig:
    q: Fraction
    v: Fraction
    p: Fraction
    precision: int
    horizon: int
    window: tuple[int, int] | None
    output_format: str
    output_path: str

    def __post_init__(self):
        if self.horizon < criteria.MIN_HORIZON:
            raise ValidationError(f"horizon must be >= {criteria.MIN_HORIZON}, got {self.horizon}")
        if self.output_format not in ("json", "csv"):
            raise ValidationError(f"unknown format {self.output_format!r}")
        if self.p <= 0:
            raise ValidationError(f"p must be positive, got {self.p}")
        # reuse the context checks on q, v and precision
        QContext(self.q, self.v, self.precision)

    def context(self, n_max: int) -> tuple[QContext, str]:
        """Context whose window is the given one or fitted to ``s_0..s_{2 n_max}``."""
        if self.window is not None:
            return QContext(self.q, self.v, self.precision, *self.window), "given"
        lo, hi = moments.fit_window(self.q, self.v, self.p, n_max, GRAM_WINDOW_TOL)
        return QContext(self.q, self.v, self.precision, lo, hi), "fitted"

    def as_dict(self, ctx: QContext | None = None, source: str | None = None) -> dict:
        out = {
            "q": str(self.q),
            "v": str(self.v),
            "p": str(self.p),
            "precision": self.precision,
            "horizon": self.horizon,
        }
        if ctx is not None:
            out["window"] = [ctx.k_min, ctx.k_max]
            out["window_source"] = source
            out["tail_tol"] = repr(ctx.tail_tol)
        out["format"] = self.output_format
        return out


class Report:
    """Collects results, per-n rows and diagnostics for one command."""

    def __init__(self, command: str, mp):
        self.command = command
        self.mp = mp
        self.config: dict = {}
        self.results: dict = {}
        self.rows: list[dict] = []
        self.diagnostics: list[str] = []

    def num(self, x) -> str:
        """Decimal string at the working precision; exact types stay exact."""
        mp = self.mp
        if isinstance(x, bool):
            return "true" if x else "false"
        if isinstance(x, (int, Fraction)):
            return str(x)
        if isinstance(x, complex) or hasattr(x, "_mpc_"):
            c = mp.mpc(x)
            sign = "-" if c.imag < 0 else "+"
            return f"{mp.nstr(c.real, mp.dps)}{sign}{mp.nstr(abs(c.imag), mp.dps)}j"
        return mp.nstr(mp.mpf(x), mp.dps)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = {"config": self.config, "results": self.results, "diagnostics": self.diagnostics}
            return json.dumps(doc, indent=2) + "\n"
        buf = io.StringIO()
        if self.rows:
            writer = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows)
        return buf.getvalue()


def _strings(rep: Report, values) -> list[str]:
    return [rep.num(v) for v in values]


def _criterion_dict(rep: Report, r: criteria.CriterionReport) -> dict:
    out = {
        "verdict": r.verdict,
        "rule": r.rule,
        "trend": rep.num(r.trend),
        "horizon": r.horizon,
        "test_values": _strings(rep, r.test_values),
    }
    if r.conclusion:
        out["conclusion"] = r.conclusion
    if "ratios" in r.extras:
        out["ratios"] = _strings(rep, r.extras["ratios"])
        out["raabe"] = rep.num(r.extras["raabe"])
    return out


def cmd_moments(cfg: RunConfig) -> Report:
    ctx, source = cfg.context(cfg.horizon)
    rep = Report("moments", ctx.mp)
    rep.config = cfg.as_dict(ctx, source)
    w = moments.WeightSpec.family(cfg.p)
    direct = moments.direct_moments(cfg.horizon, w, ctx)
    closed = moments.closed_form_moments(cfg.horizon, cfg.p, ctx)
    table = []
    worst = ctx.mp.zero
    for d, c in zip(direct.entries, closed.entries):
        gap = abs(d.value - c.value) / abs(c.value)
        worst = max(worst, gap)
        row = {
            "n": d.n,
            "s2n_direct": rep.num(d.value),
            "s2n_closed_form": rep.num(c.value),
            "rel_gap": rep.num(gap),
            "exponent": str(c.exponent),
        }
        table.append(row)
        rep.rows.append(row)
    rep.results = {
        "moments": table,
        "max_rel_gap": rep.num(worst),
        "prefactor_log_limit": str(moments.prefactor_log_limit(cfg.p, cfg.v)),
    }
    return rep


def _criteria_reports(m, cfg: RunConfig):
    return (
        criteria.perron_diag(m, cfg.horizon),
        criteria.riesz_diag(m, cfg.horizon),
        criteria.carleman_diag(m, cfg.horizon),
        criteria.q_criterion_diag(m, cfg.q, cfg.horizon),
    )


def cmd_criteria(cfg: RunConfig) -> Report:
    ctx, source = cfg.context(cfg.horizon)
    rep = Report("criteria", ctx.mp)
    rep.config = cfg.as_dict(ctx, source)
    m = moments.closed_form_moments(cfg.horizon, cfg.p, ctx)
    perron, riesz, carleman, qcrit = _criteria_reports(m, cfg)
    rep.results = {
        "perron": _criterion_dict(rep, perron),
        "riesz": _criterion_dict(rep, riesz),
        "carleman": _criterion_dict(rep, carleman),
        "q_criterion": _criterion_dict(rep, qcrit),
        "implication_chain_consistent": criteria.implication_consistent(perron, riesz, carleman),
        "prefactor_log_limit": str(moments.prefactor_log_limit(cfg.p, cfg.v)),
    }
    for i in range(cfg.horizon):
        rep.rows.append({
            "n": i + 1,
            "perron": rep.num(perron.test_values[i]),
            "riesz": rep.num(riesz.test_values[i]),
            "carleman": rep.num(carleman.test_values[i]),
            "q_criterion": rep.num(qcrit.test_values[i]),
        })
    return rep


def _gram_check(rep: Report, ctx: QContext, p) -> dict:
    m = moments.closed_form_moments(GRAM_DEGREE, p, ctx)
    basis = orthopoly.recurrence_from_moments(m, GRAM_DEGREE)
    G = orthopoly.gram_matrix(basis, moments.WeightSpec.family(p), ctx)
    return {
        "degree": GRAM_DEGREE,
        "max_deviation": rep.num(orthopoly.max_identity_deviation(G)),
        "recurrence_b": _strings(rep, basis.b),
    }


def cmd_reproduce_p3(cfg: RunConfig) -> Report:
    p = Fraction(3)
    if cfg.p != p:
        cfg = RunConfig(cfg.q, cfg.v, p, cfg.precision, cfg.horizon, cfg.window, cfg.output_format, cfg.output_path)
    ctx, source = cfg.context(max(cfg.horizon, 2 * GRAM_DEGREE))
    mp = ctx.mp
    rep = Report("reproduce-p3", mp)
    rep.config = cfg.as_dict(ctx, source)
    q = ctx.qf()

    Q = q ** 6
    z = q ** to_mpf(mp, 2 * cfg.v + 2)
    ram = moments.ramanujan_check(-1, z, Q, ctx)

    n_moments = 2 * cfg.horizon - 1  # the proof-bound series need s_{4n + 2}
    m = moments.closed_form_moments(n_moments, p, ctx)
    direct = moments.direct_moments(min(DIRECT_LIMIT, cfg.horizon), moments.WeightSpec.family(p), ctx)
    direct_gap = max(abs(d.value - m.even(d.n)) / m.even(d.n) for d in direct.entries)

    e = criteria.exact_exponent_sequence(p, cfg.horizon)
    subseq = all(e[3 * k - 1] == Fraction(k, 4) - Fraction(1, 2) for k in range(1, cfg.horizon // 3 + 1))

    qcrit = criteria.q_criterion_diag(m, cfg.q, cfg.horizon)
    carleman = criteria.carleman_diag(m, cfg.horizon)
    target = q ** (mp.one / 6)
    last_ratio = carleman.extras["ratios"][-1]
    bound = criteria.proof_bound_check(m, PROOF_LAMBDA, ctx, cfg.horizon)

    determinate = qcrit.verdict == criteria.SATISFIED
    if determinate and carleman.verdict == criteria.NOT_SATISFIED:
        conclusion = "determinate, but the Carleman criterion is not satisfied"
    elif determinate:
        conclusion = "determinate"
    else:
        conclusion = "not established at this horizon"

    rep.results = {
        "ramanujan": {
            "b": "-1",
            "z": rep.num(z),
            "base": rep.num(Q),
            "lhs": rep.num(ram.lhs),
            "rhs": rep.num(ram.rhs),
            "rel_err": rep.num(ram.rel_err),
        },
        "moments": {
            "closed_form": _strings(rep, m.values()[: cfg.horizon + 1]),
            "exponents": [str(x.exponent) for x in m.entries[: cfg.horizon + 1]],
            "direct_max_rel_gap": rep.num(direct_gap),
            "direct_checked_up_to": direct.n_max,
        },
        "exponents": {
            "e": [str(x) for x in e],
            "subsequence_formula": "e_{3m} = m/4 - 1/2",
            "subsequence_holds": subseq,
            "prefactor_log_limit": str(moments.prefactor_log_limit(p, cfg.v)),
        },
        "q_criterion": _criterion_dict(rep, qcrit),
        "carleman": _criterion_dict(rep, carleman),
        "carleman_ratio_target": rep.num(target),
        "carleman_last_ratio_rel_gap": rep.num(abs(last_ratio - target) / target),
        "verdicts": {"q_criterion": qcrit.verdict, "carleman": carleman.verdict},
        "conclusion": conclusion,
        "gram": _gram_check(rep, ctx, p),
        "proof_bound": {
            "lambda": str(PROOF_LAMBDA),
            "even_convergent": bound.even.convergent,
            "odd_convergent": bound.odd.convergent,
            "even_cauchy_gap": rep.num(bound.even.cauchy_gap),
            "odd_cauchy_gap": rep.num(bound.odd.cauchy_gap),
        },
    }
    for n in range(1, cfg.horizon + 1):
        rep.rows.append({
            "n": n,
            "s2n": rep.num(m.even(n)),
            "exponent": str(m.entries[n].exponent),
            "e_n": str(e[n - 1]),
            "q_criterion": rep.num(qcrit.test_values[n - 1]),
            "carleman_term": rep.num(carleman.test_values[n - 1]),
        })
    return rep


def cmd_fourier_check(cfg: RunConfig) -> Report:
    lo, hi = cfg.window if cfg.window is not None else FOURIER_WINDOW
    base = QContext(cfg.q, cfg.v, cfg.precision)
    rep = Report("fourier-check", base.mp)
    rep.config = cfg.as_dict()
    rep.config["window"] = [lo, hi]
    rep.config["window_source"] = "given" if cfg.window is not None else "default"
    t = qbessel.QBesselTransform.build(base, window=(lo, hi))
    sv = base.mp.svd_r(t.matrix(), compute_uv=False)
    svs = sorted((abs(s) for s in sv), reverse=True)
    rep.results = {
        "kernel_size": t.size,
        "c_qv_default": rep.num(t.c_qv),
        "smallest_singular_value": rep.num(svs[-1]),
        "injective_on_window": bool(svs[-1] > 0),
    }
    if lo < 0 < hi:
        cal = qbessel.calibrate(base.with_window(lo, hi))
        rep.results["calibration"] = {
            "padded_window": list(cal.window),
            "scale": rep.num(cal.scale),
            "c_qv_calibrated": rep.num(cal.c_calibrated),
            "involution_residual": rep.num(cal.residual),
        }
    else:
        rep.diagnostics.append("calibration skipped: window must contain grid index 0 in its interior")
    for i, s in enumerate(svs):
        rep.rows.append({"n": i, "singular_value": rep.num(s)})
    return rep


COMMANDS = {
    "moments": cmd_moments,
    "criteria": cmd_criteria,
    "reproduce-p3": cmd_reproduce_p3,
    "fourier-check": cmd_fourier_check,
}


def _rational(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmoment", description="q-moment determinacy reports")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--q", type=_rational, default=Fraction(1, 2), help="base in (0, 1); decimals are exact")
        sp.add_argument("--v", type=_rational, default=Fraction(0), help="order, > -1")
        sp.add_argument("--p", type=_rational, default=Fraction(3), help="weight exponent")
        sp.add_argument("--precision", type=int, default=256, help="working precision in bits")
        sp.add_argument("--horizon", type=int, default=criteria.DEFAULT_HORIZON)
        sp.add_argument("--kmin", type=int, default=None)
        sp.add_argument("--kmax", type=int, default=None)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", default="-", help="output file, '-' for stdout")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if (args.kmin is None) != (args.kmax is None):
            raise ValidationError("give both --kmin and --kmax or neither")
        window = (args.kmin, args.kmax) if args.kmin is not None else None
        cfg = RunConfig(args.q, args.v, args.p, args.precision, args.horizon, window, args.format, args.out)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rep = COMMANDS[args.command](cfg)
        rep.diagnostics.extend(f"{w.category.__name__}: {w.message}" for w in caught)
        text = rep.render(cfg.output_format)
    except QMomentError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
