"""Command-line interface: ``umtc <group> <command> [options]``.

Exit status is 0 on success, 1 when a check fails or a construction is
refused, and 2 on usage errors.  ``--json`` switches to machine output; all
floats are printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import classify, qsystem
from .errors import UmtcError
from .fusion import DEFAULT_TOL, check_modular_data
from .homcalc import ObjectExpr, projector_rank
from .mtc import (BUILTIN_NAMES, BraidSide, CategoryData, builtin_category, category_from_json,
                  category_to_json, deligne_product, reverse_braiding, verify_axioms)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# formatting


def _num(x):
    if isinstance(x, (complex, np.complexfloating)):
        if abs(x.imag) < 1e-15:
            return _num(x.real)
        return [_num(x.real), _num(x.imag)]
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.12g}")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, bool):
        return x
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return _num(obj)


def _fmt(x) -> str:
    x = _num(x)
    if isinstance(x, list):
        return f"{x[0]:.12g}{x[1]:+.12g}i"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _matrix_text(Z) -> str:
    Z = np.asarray(Z)
    w = max(len(str(v)) for v in Z.ravel())
    return "\n".join("  " + " ".join(str(v).rjust(w) for v in row) for row in Z)


class Output:
    def __init__(self, args):
        self.json = args.json
        self.out = args.out
        self.doc: dict = {}
        self.lines: list[str] = []

    def line(self, text: str = "") -> None:
        self.lines.append(text)

    def emit(self) -> None:
        text = (json.dumps(_clean(self.doc), indent=2, sort_keys=True) if self.json
                else "\n".join(self.lines)) + "\n"
        if self.out:
            Path(self.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)


# ---------------------------------------------------------------------------
# inputs


def load_category(ref: str) -> CategoryData:
    if ref.startswith("builtin:"):
        try:
            return builtin_category(ref)
        except ValueError as e:
            raise UsageError(str(e)) from None
    path = Path(ref)
    if not path.exists():
        raise UsageError(f"no such category file {ref!r} (builtins: {', '.join(BUILTIN_NAMES)})")
    return category_from_json(json.loads(path.read_text(encoding="utf-8")))


def load_qsystem(cat: CategoryData, ref: str) -> qsystem.QSystem:
    if ref.startswith("builtin:"):
        try:
            return qsystem.builtin_qsystem(cat, ref)
        except (ValueError, KeyError) as e:
            raise UsageError(str(e)) from None
    path = Path(ref)
    if not path.exists():
        raise UsageError(f"no such Q-system file {ref!r}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(doc.get("category"), dict):
        doc = dict(doc, category=doc.get("category") or "")
    return qsystem.qsystem_from_json(doc, resolve=lambda r: cat)


def parse_levels(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError("empty level list")
    return out


def parse_phi(cat: CategoryData, text: str | None):
    if text is None or text.lower() in ("id", "identity"):
        return list(range(cat.rank))
    if text.upper() == "C":
        return qsystem.charge_conjugation(cat)
    try:
        return [cat.ring.index(int(t) if t.strip().isdigit() else t.strip()) for t in text.split(",")]
    except KeyError as e:
        raise UsageError(f"unknown label {e} in phi") from None


def default_tol() -> float:
    env = os.environ.get("QSYS_TOL")
    if env:
        try:
            return float(env)
        except ValueError:
            raise UsageError(f"QSYS_TOL={env!r} is not a number") from None
    return DEFAULT_TOL


# ---------------------------------------------------------------------------
# reports


def _qsys_summary(q: qsystem.QSystem, tol: float) -> tuple[dict, bool]:
    rep = qsystem.verify(q, tol)
    doc = {
        "name": q.name,
        "theta": q.label(),
        "multiplicities": q.theta.mult,
        "dtheta": q.dtheta,
        "residuals": rep.residuals,
        "flags": rep.flags,
    }
    return doc, rep.ok


def _qsys_lines(out: Output, doc: dict) -> None:
    out.line(f"Q-system {doc['name']}: θ = {doc['theta']}")
    out.line(f"  dθ = {_fmt(doc['dtheta'])}")
    for k, v in doc["residuals"].items():
        out.line(f"  {k:16s} {_fmt(v)}")
    flags = doc["flags"]
    out.line("  " + "  ".join(f"{k}={'yes' if flags[k] else 'no'}"
                              for k in ("verified", "irreducible", "commutative")))


def _emit_qsystem(out: Output, q: qsystem.QSystem, tol: float, key: str = "qsystem") -> bool:
    doc, ok = _qsys_summary(q, tol)
    out.doc[key] = doc
    _qsys_lines(out, doc)
    return ok


# ---------------------------------------------------------------------------
# commands


def cmd_mtc_check(args, out: Output) -> int:
    cat = load_category(args.source)
    rep = verify_axioms(cat, args.tol)
    mod = check_modular_data(cat.ring, cat.md, args.tol)
    res = {**rep.residuals, **mod.residuals}
    ok = rep.ok and mod.ok
    out.doc.update(category=cat.name, rank=cat.rank, residuals=res, passed=ok,
                   dims=cat.dims, twists=cat.twists, central_charge=cat.md.c_mod8)
    out.line(f"{cat.name} (rank {cat.rank})")
    for k, v in res.items():
        out.line(f"  {k:18s} {_fmt(v):>22s}  {'ok' if v < args.tol else 'FAIL'}")
    out.line(f"  c mod 8 = {_fmt(cat.md.c_mod8)}")
    out.line("all checks pass" if ok else "checks FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_mtc_export(args, out: Output) -> int:
    cat = load_category(args.source)
    out.json = True
    out.doc = category_to_json(cat)
    return EXIT_OK


def cmd_mtc_deligne(args, out: Output) -> int:
    A, B = load_category(args.first), load_category(args.second)
    if args.reverse_second:
        B = reverse_braiding(B)
    D = deligne_product(A, B).materialize()
    out.json = True
    out.doc = category_to_json(D)
    return EXIT_OK


def _category_and_q(args) -> tuple[CategoryData, qsystem.QSystem]:
    cat = load_category(args.category)
    return cat, load_qsystem(cat, args.qsystem)


def cmd_qsys_verify(args, out: Output) -> int:
    _, q = _category_and_q(args)
    return EXIT_OK if _emit_qsystem(out, q, args.tol) else EXIT_FAIL


def _maybe_save(args, q: qsystem.QSystem) -> None:
    if getattr(args, "save", None):
        Path(args.save).write_text(json.dumps(_clean(qsystem.qsystem_to_json(q, args.category)), indent=1),
                                   encoding="utf-8")


def cmd_qsys_lr(args, out: Output) -> int:
    cat = load_category(args.category)
    q = qsystem.lr_qsystem(cat, cat, parse_phi(cat, args.phi))
    _maybe_save(args, q)
    return EXIT_OK if _emit_qsystem(out, q, args.tol) else EXIT_FAIL


def cmd_qsys_product(args, out: Output) -> int:
    cat = load_category(args.category)
    q1, q2 = load_qsystem(cat, args.q1), load_qsystem(cat, args.q2)
    side = BraidSide.Plus if args.side == "plus" else BraidSide.Minus
    q = qsystem.product_qsystem(q1, q2, side)
    _maybe_save(args, q)
    return EXIT_OK if _emit_qsystem(out, q, args.tol) else EXIT_FAIL


def cmd_qsys_center(args, out: Output) -> int:
    _, q = _category_and_q(args)
    P = qsystem.center_projector(q, ObjectExpr.unit(q.cat), args.side)
    rank = projector_rank(P)
    c = qsystem.left_center(q) if args.side == "left" else qsystem.right_center(q)
    _maybe_save(args, c)
    out.doc["projector_rank"] = rank
    out.line(f"{args.side} center projector rank {rank} of {int(q.theta.mult.sum())}")
    return EXIT_OK if _emit_qsystem(out, c, args.tol) else EXIT_FAIL


def cmd_qsys_full_center(args, out: Output) -> int:
    cat, q = _category_and_q(args)
    z = qsystem.full_center(q)
    _maybe_save(args, z)
    ok = _emit_qsystem(out, z, args.tol)
    Z = qsystem._center_invariant(z)
    out.doc["Z"] = Z
    out.doc["dim_total"] = cat.md.dim_total
    out.line("  Z =")
    out.line(_matrix_text(Z))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_qsys_invariant(args, out: Output) -> int:
    cat, q = _category_and_q(args)
    inv = qsystem.invariant_matrix(q)
    err = classify.commutes_with_ST(inv.Z, cat.md)
    out.doc.update(Z=inv.Z, trace=inv.trace, commutator=err)
    out.line(f"invariant matrix of {q.name} (trace {inv.trace}, [Z,S],[Z,T] ≤ {_fmt(err)})")
    out.line(_matrix_text(inv.Z))
    return EXIT_OK if err < 1e-6 else EXIT_FAIL


def cmd_qsys_functor_t(args, out: Output) -> int:
    _, q = _category_and_q(args)
    if q.cat.factors is None:
        q = qsystem.full_center(q)
    t = qsystem.functor_T(q)
    _maybe_save(args, t)
    return EXIT_OK if _emit_qsystem(out, t, args.tol) else EXIT_FAIL


def cmd_qsys_morita(args, out: Output) -> int:
    cat = load_category(args.category)
    q1, q2 = load_qsystem(cat, args.q1), load_qsystem(cat, args.q2)
    res = qsystem.morita_equivalent(q1, q2, args.tol, args.seed)
    out.doc.update(verdict=res.verdict.value, certificate=res.centers.certificate,
                   method=res.centers.method, Z1=res.invariants[0], Z2=res.invariants[1])
    out.line(f"Morita equivalent: {res.verdict.value}")
    if res.centers.certificate:
        out.line(f"  {res.centers.certificate}")
    if res.pointed_equivalence is not None:
        out.doc["equivalent"] = res.pointed_equivalence.verdict.value
        out.line(f"  pointed category, plain equivalence: {res.pointed_equivalence.verdict.value}")
    return EXIT_OK


def cmd_classify_invariants(args, out: Output) -> int:
    cat = load_category(args.category)
    invs = classify.enumerate_invariants(cat.md, args.max_entry)
    cb = classify.commutant_basis(cat.md)
    out.doc.update(category=cat.name, commutant_dim=cb.dim, count=len(invs),
                   invariants=[{"Z": z.Z, "trace": z.trace} for z in invs])
    out.line(f"{cat.name}: commutant dimension {cb.dim}, {len(invs)} invariant(s)")
    for i, z in enumerate(invs):
        out.line(f"[{i}] trace {z.trace}")
        out.line(_matrix_text(z.Z))
    return EXIT_OK


def cmd_classify_ade(args, out: Output) -> int:
    rows = classify.ade_report(parse_levels(args.levels), args.max_entry)
    out.doc["levels"] = [r.to_json() for r in rows]
    out.line(classify.format_ade_table(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--tol", type=float, default=None, help="tolerance (default 1e-9 or $QSYS_TOL)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized solvers")
    common.add_argument("--out", help="write the report to this path")

    p = argparse.ArgumentParser(prog="umtc", description="Modular tensor categories and Q-systems.")
    groups = p.add_subparsers(dest="group", required=True)

    mtc = groups.add_parser("mtc", help="category data").add_subparsers(dest="cmd", required=True)
    c = mtc.add_parser("check", parents=[common], help="verify axioms and modular data")
    c.add_argument("source", help="builtin:<name> or a category JSON file")
    c.set_defaults(func=cmd_mtc_check)
    c = mtc.add_parser("export", parents=[common], help="write category JSON")
    c.add_argument("source")
    c.set_defaults(func=cmd_mtc_export)
    c = mtc.add_parser("deligne", parents=[common], help="Deligne product of two categories")
    c.add_argument("first")
    c.add_argument("second")
    c.add_argument("--reverse-second", action="store_true", help="use the reversed braiding on the second factor")
    c.set_defaults(func=cmd_mtc_deligne)

    qs = groups.add_parser("qsys", help="Q-systems").add_subparsers(dest="cmd", required=True)

    def qcmd(name, func, helptext, single=True):
        c = qs.add_parser(name, parents=[common], help=helptext)
        c.add_argument("--category", required=True)
        if single:
            c.add_argument("--qsystem", required=True, help="builtin:<trivial|lr|perm-C|isotropic-<g>> or JSON file")
        c.add_argument("--save", help="also write the resulting Q-system as JSON")
        c.set_defaults(func=func)
        return c

    qcmd("verify", cmd_qsys_verify, "check the Q-system axioms")
    c = qcmd("lr", cmd_qsys_lr, "canonical LR Q-system on ⊕ ρ⊠ρ̄", single=False)
    c.add_argument("--phi", help="'id', 'C' or a comma-separated label permutation")
    c = qcmd("product", cmd_qsys_product, "product Q-system", single=False)
    c.add_argument("--q1", required=True)
    c.add_argument("--q2", required=True)
    c.add_argument("--side", choices=("plus", "minus"), default="plus")
    c = qcmd("center", cmd_qsys_center, "left or right center")
    c.add_argument("--side", choices=("left", "right"), default="left")
    qcmd("full-center", cmd_qsys_full_center, "full center and its invariant")
    qcmd("invariant", cmd_qsys_invariant, "modular invariant matrix")
    qcmd("functor-t", cmd_qsys_functor_t, "image under the functor T (full center first if needed)")
    c = qcmd("morita", cmd_qsys_morita, "Morita equivalence via full centers", single=False)
    c.add_argument("--q1", required=True)
    c.add_argument("--q2", required=True)

    cl = groups.add_parser("classify", help="modular invariants").add_subparsers(dest="cmd", required=True)
    c = cl.add_parser("invariants", parents=[common], help="enumerate modular invariants")
    c.add_argument("--category", required=True)
    c.add_argument("--max-entry", type=int, default=8)
    c.set_defaults(func=cmd_classify_invariants)
    c = cl.add_parser("ade", parents=[common], help="su2(k) A-D-E table")
    c.add_argument("--levels", required=True, help="e.g. 1..10 or 4,10,16")
    c.add_argument("--max-entry", type=int, default=8)
    c.set_defaults(func=cmd_classify_ade)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    out = Output(args)
    try:
        if args.tol is None:
            args.tol = default_tol()
        code = args.func(args, out)
    except UsageError as e:
        print(f"umtc: {e}", file=sys.stderr)
        return EXIT_USAGE
    except UmtcError as e:
        print(f"umtc: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    out.emit()
    return code


if __name__ == "__main__":
    sys.exit(main())
