"""Command-line harness.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 for unparsable input, 3 for numerical failures, 4 for unsupported
(variant, parameter) combinations. The thread count defaults to the
OCTOVAL_THREADS environment variable; results do not depend on it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import calculus as calc
from . import checks
from . import radon
from . import spin
from . import valuation as val
from .errors import CapabilityError, DomainError, NumericalFailure, ParseError, PreconditionError
from .hermitian import herm_det, herm_min_eig
from .measure import TestFunction
from .sampling import MeasureEstimate

EXIT_FAIL, EXIT_PARSE, EXIT_NUMERICAL, EXIT_CAPABILITY = 1, 2, 3, 4
CSV_COLUMNS = ("command", "id", "value", "std_error", "n_samples", "seed", "pass", "tolerance")


# ---------------------------------------------------------------------------
# field mini-language
# ---------------------------------------------------------------------------

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?")
_NAMES = ("re-q1-conj-q2", "quadform", "gaussian", "normsq1", "normsq", "abs")


def _load_matrix(path: str) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read quadratic form {path!r}: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("matrix")
    m = np.asarray(data, float)
    if m.shape != (16, 16):
        raise ParseError(f"{path}: expected a 16x16 matrix")
    return m


class _FieldParser:
    """Recursive descent over: expr := term (('+'|'-') term)*, term := factor ('*' factor)*."""

    def __init__(self, text: str):
        self.s = text
        self.i = 0

    def parse(self) -> calc.ScalarField:
        out = self.expr()
        self.ws()
        if self.i != len(self.s):
            raise ParseError(f"unexpected {self.s[self.i:]!r} in field expression")
        if not isinstance(out, calc.ScalarField):
            raise ParseError("field expression is a bare number")
        return out

    def ws(self):
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.ws()
        return self.s[self.i] if self.i < len(self.s) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r} at position {self.i} of {self.s!r}")
        self.i += 1

    @staticmethod
    def combine(a, b, sign: float):
        if isinstance(a, float) and isinstance(b, float):
            return a + sign * b
        fa = a if isinstance(a, calc.ScalarField) else calc.constant(a)
        fb = b if isinstance(b, calc.ScalarField) else calc.constant(b)
        return fa + fb if sign > 0 else fa - fb

    def expr(self):
        out = self.term()
        while self.peek() in ("+", "-"):
            op = self.s[self.i]
            self.i += 1
            out = self.combine(out, self.term(), 1.0 if op == "+" else -1.0)
        return out

    def term(self):
        out = self.factor()
        while self.peek() == "*":
            self.i += 1
            rhs = self.factor()
            if isinstance(out, calc.ScalarField) and isinstance(rhs, calc.ScalarField):
                raise ParseError("products of two fields are not supported")
            out = rhs * out if isinstance(out, float) and isinstance(rhs, calc.ScalarField) else out * rhs
        return out

    def factor(self):
        ch = self.peek()
        if ch == "-":
            self.i += 1
            v = self.factor()
            return -v
        if ch == "(":
            self.i += 1
            v = self.expr()
            self.expect(")")
            return v
        m = _NUMBER.match(self.s, self.i)
        if m:
            self.i = m.end()
            return float(m.group(0))
        for name in _NAMES:
            end = self.i + len(name)
            if self.s.startswith(name, self.i) and not (end < len(self.s) and (self.s[end].isalnum() or self.s[end] == "_")):
                self.i = end
                return self.atom(name)
        raise ParseError(f"unknown token at position {self.i} of {self.s!r}")

    def argument(self) -> str:
        self.expect("(")
        depth, start = 1, self.i
        while self.i < len(self.s) and depth:
            depth += {"(": 1, ")": -1}.get(self.s[self.i], 0)
            self.i += 1
        if depth:
            raise ParseError("unbalanced parentheses")
        return self.s[start : self.i - 1].strip()

    def atom(self, name: str) -> calc.ScalarField:
        if name == "normsq":
            return calc.normsq()
        if name == "normsq1":
            return calc.normsq1()
        if name == "re-q1-conj-q2":
            return calc.re_q1_conj_q2()
        if name == "abs":
            return calc.euclidean_norm()
        arg = self.argument()
        if name == "gaussian":
            try:
                s = float(arg)
            except ValueError as exc:
                raise ParseError(f"gaussian needs a numeric scale, got {arg!r}") from exc
            if not s > 0:
                raise ParseError("gaussian scale must be positive")
            return calc.gaussian(s)
        return calc.quadratic_form(_load_matrix(arg), name=f"quadform({arg})")


def parse_field(text: str) -> calc.ScalarField:
    """Parse a field expression such as ``2*normsq + gaussian(0.5) - re-q1-conj-q2``."""
    return _FieldParser(text).parse()


def parse_vector(text: str, name: str = "vector") -> np.ndarray:
    """A scalar (broadcast to 16 coordinates) or 16 comma-separated numbers."""
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"{name}: not a list of numbers: {text!r}") from exc
    if len(parts) == 1:
        return np.full(16, parts[0])
    if len(parts) != 16:
        raise ParseError(f"{name}: expected 1 or 16 numbers, got {len(parts)}")
    return np.array(parts)


def parse_tolerances(items) -> dict[str, float]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ParseError(f"tolerance override must be KEY=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError as exc:
            raise ParseError(f"tolerance {key!r}: {value!r} is not a number") from exc
    return out


def _bump(ns) -> TestFunction:
    lo = parse_vector(ns.support_lo, "--support-lo")
    hi = parse_vector(ns.support_hi, "--support-hi")
    if np.any(hi <= lo):
        raise ParseError("bump support box is empty")
    return TestFunction((lo + hi) / 2.0, (hi - lo) / 2.0, power=ns.order)


def _body(path: str):
    try:
        return val.load_body(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read body {path!r}: {exc}") from exc


def _smoothing(ns) -> val.Smoothing:
    return val.Smoothing(ns.smoothing, ns.beta)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _row(id: str, value, std_error=None, n_samples=None, seed=None, passed=None, tolerance=None, **extra) -> dict:
    out = {"id": id, "value": value, "std_error": std_error, "n_samples": n_samples, "seed": seed,
           "pass": None if passed is None else bool(passed), "tolerance": tolerance}
    out.update(extra)
    return out


def _estimate_row(id: str, est, **kw) -> dict:
    return _row(id, float(est.value), float(est.std_error), int(est.n_samples), est.seed, **kw)


def _measurement_row(m: checks.Measurement, prefix: str = "") -> dict:
    return _row(prefix + m.id, m.value, m.std_error, m.n_samples, m.seed, m.passed, m.tolerance, rule=m.rule,
                note=m.note)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x).__name__}")


def render(command: str, payload: dict, fmt: str) -> bytes:
    if fmt == "json":
        return (json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n").encode()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in payload["results"]:
        row = [command] + [_jsonable(r[c]) if isinstance(r[c], (np.generic, np.ndarray)) else r[c]
                           for c in CSV_COLUMNS[1:]]
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue().encode()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_algebra_check(ns, tol):
    res = checks.criterion_1(seed=ns.seed, tol=tol)
    res2 = checks.criterion_2(seed=ns.seed, tol=tol)
    res3 = checks.criterion_3(seed=ns.seed, tol=tol)
    rows = [_measurement_row(m, f"c{r.criterion}.") for r in (res, res2, res3) for m in r.items]
    return rows, {}


def cmd_hessian(ns, tol):
    f = parse_field(ns.field)
    x = parse_vector(ns.point, "--point")
    h = calc.octonionic_hessian(f, x, method=ns.method)
    v = h.to_vector()
    rows = [_row(f"hessian.{name}", float(val_)) for name, val_ in zip(["a", "b"] + [f"q{i}" for i in range(8)], v)]
    rows.append(_row("det", float(herm_det(v))))
    rows.append(_row("min_eigenvalue_j", float(herm_min_eig(v))))
    return rows, {"field": f.name, "point": x.tolist(), "method": ns.method}


def cmd_psh_check(ns, tol):
    f = parse_field(ns.field)
    if ns.mollify:
        f = calc.mollify(f, calc.Mollifier(ns.mollify), seed=ns.seed)
    n = ns.samples or 256
    t = tol.get("psh", 1e-8)
    rep = calc.is_psh(f, (ns.region_lo, ns.region_hi), n, ns.seed, t)
    return [_row("min_eigenvalue", rep.min_eigenvalue, None, n, ns.seed, rep.passed, -t)], {
        "field": f.name, "witness": rep.witness.tolist()}


def cmd_pseudo_volume(ns, tol):
    k = _body(ns.body)
    r = val.pseudo_volume(k, _smoothing(ns), ns.samples or val.DEFAULT_N, ns.seed, threads=ns.threads)
    row = _estimate_row("pseudo_volume", r, smoothing=r.smoothing)
    if ns.expect is not None:
        t = 3.0 * r.std_error
        row.update({"pass": bool(abs(r.value - ns.expect) <= t), "tolerance": t, "expected": ns.expect})
    return [row], {"body": ns.body}


def cmd_psi_valuation(ns, tol):
    k = _body(ns.body)
    psi = _bump(ns)
    r = val.psi_valuation(k, psi, _smoothing(ns), ns.samples or val.DEFAULT_N, ns.seed, threads=ns.threads)
    return [_estimate_row("psi_valuation", r, smoothing=r.smoothing)], {"body": ns.body}


def cmd_additivity(ns, tol):
    k1, k2 = _body(ns.body1), _body(ns.body2)
    psi = _bump(ns)
    betas = [float(b) for b in ns.ladder.split(",")]
    n = ns.samples or val.DEFAULT_N
    levels = val.additivity_residual(k1, k2, psi, [(b, b) for b in betas], n, ns.seed, ns.threads)
    rel = tol.get("smoothing", 1e-2)
    rows = []
    for lv in levels:
        t = 2.0 * lv.residual.std_error + rel * lv.largest_term
        rows.append(_estimate_row(f"residual.beta{lv.beta:g}", lv.residual, passed=abs(lv.residual.value) <= t,
                                  tolerance=t))
    return rows, {"body1": ns.body1, "body2": ns.body2}


def cmd_t_valuation(ns, tol):
    k = _body(ns.body)
    r = val.t_valuation(k, ns.index, ns.samples or (1 << 12), ns.seed, ns.threads)
    return [_estimate_row(f"T{ns.index}", r)], {"body": ns.body}


def cmd_u_valuation(ns, tol):
    k = _body(ns.body)
    exact_value, r = val.u_valuation(k, ns.index, ns.samples or (1 << 14), ns.seed, ns.threads)
    t = 3.0 * r.std_error
    return [
        _row(f"U{ns.index}.quadrature", exact_value),
        _estimate_row(f"U{ns.index}.monte_carlo", r, passed=abs(r.value - exact_value) <= t, tolerance=t),
    ], {"body": ns.body}


def cmd_radon_demo(ns, tol):
    c = radon.inversion_constant()
    g = radon.GaussianImage.single(ns.scale)
    rng = np.random.default_rng(ns.seed)
    rel = tol.get("relative", 1e-3 if ns.mode == "analytic-gaussian" else 1e-2)
    n = ns.samples or (1 << 16 if ns.mode == "analytic-gaussian" else 64)
    rows = [_row("delta4_at_zero.radial", float(radon.radial_laplacian_polynomial()[0])),
            _row("delta4_at_zero.hermite", float(radon.laplacian_power_at_zero_hermite())),
            _row("inversion_constant", c)]
    for k in range(ns.points):
        q = rng.standard_normal(16)
        q *= ns.scale * rng.random() / np.linalg.norm(q)
        est = radon.inverse_operator_at(g, q, n, ns.seed + k, ns.mode, h=ns.step, threads=ns.threads)
        fq = float(np.exp(-q @ q / (2 * ns.scale**2)))
        ratio = MeasureEstimate(est.value / fq, est.std_error / fq, est.n_samples, est.seed)
        rows.append(_estimate_row(f"ratio.point{k}", ratio, passed=abs(ratio.value / c - 1.0) <= rel,
                                  tolerance=rel * c))
    return rows, {"scale": ns.scale, "mode": ns.mode, "step": ns.step}


def cmd_spin9_dim(ns, tol):
    ctx = spin.spin_context()
    full, compact = len(ctx.full), len(ctx.compact)
    print(f"dim sl2(O) = {full}, dim compact = {compact}")
    return [_row("dim_sl2", full, passed=full == 45, tolerance=0), _row("dim_compact", compact, passed=compact == 36,
                                                                       tolerance=0)], {}


def _run_criteria(ks, ns, tol):
    rows = []
    for k in ks:
        res = checks.run_criterion(k, seed=ns.seed, threads=ns.threads, tol=tol)
        print(res.summary(), file=sys.stderr)
        rows.extend(_measurement_row(m, f"c{k}.") for m in res.items)
    return rows


def cmd_report(ns, tol):
    ks = [int(k) for k in ns.criteria.split(",")] if ns.criteria else list(checks.CRITERIA)
    return _run_criteria(ks, ns, tol), {"criteria": ks}


def cmd_suite(ns, tol):
    ks = list(checks.CRITERIA) if ns.criterion == "all" else [int(ns.criterion)]
    return _run_criteria(ks, ns, tol), {"criteria": ks}


COMMANDS = {
    "algebra-check": cmd_algebra_check,
    "hessian": cmd_hessian,
    "psh-check": cmd_psh_check,
    "pseudo-volume": cmd_pseudo_volume,
    "psi-valuation": cmd_psi_valuation,
    "additivity": cmd_additivity,
    "t-valuation": cmd_t_valuation,
    "u-valuation": cmd_u_valuation,
    "radon-demo": cmd_radon_demo,
    "spin9-dim": cmd_spin9_dim,
    "report": cmd_report,
    "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (recorded in the output)")
    common.add_argument("--samples", type=int, default=None, help="Monte-Carlo sample count")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: $OCTOVAL_THREADS or 1)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", default=None, help="write the report here instead of stdout")
    common.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE", help="tolerance override")

    body = argparse.ArgumentParser(add_help=False)
    body.add_argument("--smoothing", choices=("lse", "mollify"), default="lse")
    body.add_argument("--beta", type=float, default=64.0)

    bump = argparse.ArgumentParser(add_help=False)
    bump.add_argument("--support-lo", default="-0.5", help="lower corner of the bump's support box")
    bump.add_argument("--support-hi", default="0.5", help="upper corner of the bump's support box")
    bump.add_argument("--order", type=int, default=4, help="bump exponent k; the bump is C^(k-1)")

    p = argparse.ArgumentParser(prog="octoval", description="Octonionic pluripotential theory and valuations.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("algebra-check", parents=[common], help="octonion and hermitian-matrix identities")
    s = sub.add_parser("hessian", parents=[common], help="octonionic Hessian of a field at a point")
    s.add_argument("--field", required=True)
    s.add_argument("--point", default="0")
    s.add_argument("--method", choices=("auto", "fd", "analytic"), default="auto")
    s = sub.add_parser("psh-check", parents=[common], help="sampled plurisubharmonicity test")
    s.add_argument("--field", required=True)
    s.add_argument("--region-lo", type=float, default=-1.0)
    s.add_argument("--region-hi", type=float, default=1.0)
    s.add_argument("--mollify", type=int, default=0, help="mollify with delta_n first")
    s = sub.add_parser("pseudo-volume", parents=[common, body], help="octonionic pseudo-volume of a body")
    s.add_argument("--body", required=True)
    s.add_argument("--expect", type=float, default=None, help="check against this value within 3 sigma")
    s = sub.add_parser("psi-valuation", parents=[common, body, bump], help="valuation against a bump function")
    s.add_argument("--body", required=True)
    s = sub.add_parser("additivity", parents=[common, bump], help="additivity residual for two bodies")
    s.add_argument("--body1", required=True)
    s.add_argument("--body2", required=True)
    s.add_argument("--ladder", default="32,64,128", help="comma-separated smoothing levels")
    s = sub.add_parser("t-valuation", parents=[common], help="T_i: mean intrinsic volume of line projections")
    s.add_argument("--body", required=True)
    s.add_argument("--index", type=int, required=True)
    s = sub.add_parser("u-valuation", parents=[common], help="U_j: integral over affine lines of sections")
    s.add_argument("--body", required=True)
    s.add_argument("--index", type=int, required=True)
    s = sub.add_parser("radon-demo", parents=[common], help="Radon inversion on a Gaussian")
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--points", type=int, default=10)
    s.add_argument("--mode", choices=("analytic-gaussian", "fd"), default="analytic-gaussian")
    s.add_argument("--step", type=float, default=0.6, help="finite-difference spacing in fd mode")
    sub.add_parser("spin9-dim", parents=[common], help="dimensions of sl2(O) and its compact part")
    s = sub.add_parser("report", parents=[common], help="run acceptance criteria and write one report")
    s.add_argument("--criteria", default=None, help="comma-separated criterion numbers (default: all)")
    s = sub.add_parser("suite", parents=[common], help="run one acceptance criterion, or all")
    s.add_argument("criterion", choices=[str(k) for k in checks.CRITERIA] + ["all"])
    return p


def _seed_record(ns):
    """The seed(s) a run used: explicit, or the per-criterion defaults for suites."""
    if ns.command in ("report", "suite") and ns.seed is None:
        ks = list(checks.CRITERIA) if ns.command == "report" or ns.criterion == "all" else [int(ns.criterion)]
        if ns.command == "report" and ns.criteria:
            ks = [int(k) for k in ns.criteria.split(",")]
        return {str(k): checks.DEFAULT_SEEDS[k] for k in ks}
    return ns.seed


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if ns.seed is None and ns.command not in ("report", "suite"):
        ns.seed = 0
    try:
        tol = parse_tolerances(ns.tol)
        rows, inputs = COMMANDS[ns.command](ns, tol)
    except (ParseError, DomainError, PreconditionError) as exc:
        print(f"octoval: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalFailure as exc:
        print(f"octoval: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CapabilityError as exc:
        print(f"octoval: not supported: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    passed = all(r["pass"] is None or bool(r["pass"]) for r in rows)
    payload = {
        "command": ns.command,
        "seed": _seed_record(ns),
        "samples": ns.samples,
        "tolerance_overrides": tol,
        "inputs": inputs,
        "results": rows,
        "passed": passed,
    }
    data = render(ns.command, payload, ns.format)
    if ns.output:
        Path(ns.output).write_bytes(data)
    elif ns.command != "spin9-dim":
        sys.stdout.write(data.decode())
    return 0 if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
