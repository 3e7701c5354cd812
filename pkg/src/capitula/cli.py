"""Command-line driver: survey scans, persistence, and report generation.

Scans walk primes in an arithmetic progression, decide capitulation via the
criteria engine (computing Fitting ideals only when the cheap rules cannot
certify a verdict), and emit one SurveyRecord per prime with a nontrivial
p-class part.  Failed conductors become first-class status=error rows so
aggregate counts stay auditable.  Reports are byte-deterministic for
identical record lists.
"""

import argparse
import concurrent.futures
import io
import json
import os
import sys
import time
from dataclasses import dataclass

from . import cycunits, fields, iwasawa, quadforms
from . import criteria as cr
from .arith import is_prime
from .errors import (CapitulaError, InsufficientData, PrecisionTooLow,
                     StabilizationFailure)

CSV_COLUMNS = ("ell", "kind", "p", "class_part", "status", "kernel",
               "certificates", "timing_ms", "provenance")


@dataclass(frozen=True)
class SurveyRecord:
    ell: int
    kind: str
    p: object  # prime or "all"
    class_part: tuple
    status: str
    kernel: object  # int or (lo, hi)
    certificates: tuple  # rule names
    timing_ms: int
    provenance: str  # rules | eigenspace | fixture | error

    def row(self):
        part = "x".join(str(d) for d in self.class_part)
        kernel = ("%d-%d" % self.kernel if isinstance(self.kernel, tuple)
                  else str(self.kernel))
        return (str(self.ell), self.kind, str(self.p), part, self.status,
                kernel, ";".join(self.certificates), str(self.timing_ms),
                self.provenance)

    @staticmethod
    def from_row(row):
        ell, kind, p, part, status, kernel, certs, ms, prov = row
        return SurveyRecord(
            ell=int(ell), kind=kind, p=int(p) if p != "all" else p,
            class_part=tuple(int(x) for x in part.split("x") if x),
            status=status,
            kernel=(tuple(int(x) for x in kernel.split("-"))
                    if "-" in kernel else int(kernel)),
            certificates=tuple(c for c in certs.split(";") if c),
            timing_ms=int(ms), provenance=prov,
        )


def _provenance(verdict):
    names = [c[0] for c in verdict.certificates]
    if "fixture" in names:
        return "fixture"
    if any(n.startswith("eigenspace") for n in names):
        return "eigenspace"
    return "rules"


def _record(ell, kind, p, verdict, started, class_part):
    return SurveyRecord(
        ell=ell, kind=kind, p=p, class_part=tuple(class_part),
        status=verdict.status, kernel=verdict.kernel_order,
        certificates=tuple(c[0] for c in verdict.certificates),
        timing_ms=int((time.monotonic() - started) * 1000),
        provenance=_provenance(verdict),
    )


def _error_record(ell, kind, p, exc, started):
    return SurveyRecord(
        ell=ell, kind=kind, p=p, class_part=(), status="error",
        kernel=0, certificates=(type(exc).__name__,),
        timing_ms=int((time.monotonic() - started) * 1000),
        provenance="error",
    )


# ---------------------------------------------------------------------------
# fitting-record cache (append-only, cycunits table format)


def _cache_path(cache_dir, p, chi_order, chi_id=1):
    suffix = "" if chi_id == 1 else f"_id{chi_id}"
    return os.path.join(cache_dir, f"fitting_p{p}_chi{chi_order}{suffix}.txt")


def _cache_load(cache_dir, p, chi_order, chi_id=1):
    if not cache_dir:
        return {}
    path = _cache_path(cache_dir, p, chi_order, chi_id)
    if not os.path.exists(path):
        return {}
    return {rec.ell: rec for rec in cycunits.ingest_table(path)}


def _cache_append(cache_dir, p, chi_order, rec, chi_id=1):
    if not cache_dir:
        return
    os.makedirs(cache_dir, exist_ok=True)
    path = _cache_path(cache_dir, p, chi_order, chi_id)
    line = (f"ell={rec.ell} p={rec.p} chi={rec.chi_order} n={rec.n} "
            f"prec={rec.N} gens=[{','.join(rec.generators)}]\n")
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line)


def _fitting(ell, p, chi_order, cache_dir, cached, chi_id=1):
    if ell in cached:
        return cached[ell]
    rec = cycunits.compute_fitting_ideal(ell, p, chi_order, chi_id=chi_id)
    _cache_append(cache_dir, p, chi_order, rec, chi_id)
    return rec


# ---------------------------------------------------------------------------
# scans


def _scan_quadratic_one(args):
    ell, p, cache_dir = args
    started = time.monotonic()
    field = cr.quadratic_real_field(ell)
    try:
        group = quadforms.class_group(ell)
        inv = tuple(quadforms.p_part(group, p))
        if not inv:
            return None
        try:
            verdict = cr.classify(field, p, class_invariants=inv)
        except InsufficientData:
            rec = _fitting(ell, p, 2, cache_dir,
                           _cache_load(cache_dir, p, 2))
            verdict = cr.classify(field, p, class_invariants=inv, fitting=rec)
        return _record(ell, "quadratic-real", p, verdict, started, inv)
    except (StabilizationFailure, PrecisionTooLow, CapitulaError) as exc:
        return _error_record(ell, "quadratic-real", p, exc, started)


def _merge_verdicts(verdicts, invs):
    """Combine per-eigenspace verdicts for one field: kernels multiply,
    certificates that assert completeness must hold in every eigenspace."""
    if len(verdicts) == 1:
        return verdicts[0]
    if verdicts[0].status == "no-potential":
        return verdicts[0]
    order = kernel = 1
    for d in invs:
        order *= d
    kinvs = []
    certs = []
    for v in verdicts:
        kernel *= v.kernel_order
        kinvs.extend(v.kernel_invariants or ())
        for c in v.certificates:
            if c not in certs:
                certs.append(c)
    for name in ("maximal_capitulation", "cor3_full"):
        if not all(name in (c[0] for c in v.certificates) for v in verdicts):
            certs = [c for c in certs if c[0] != name]
    status = ("none" if kernel == 1
              else "full" if kernel == order else "partial")
    return cr.CapitulationVerdict(
        verdicts[0].field, verdicts[0].p, kernel, tuple(sorted(kinvs)),
        status, tuple(certs))


def _scan_cubic_one(args):
    ell, p, cache_dir = args
    started = time.monotonic()
    field = cr.cyclic_cubic_field(ell)
    try:
        # p = 1 (mod 3): the two conjugate cubic characters give distinct
        # p-adic eigenspaces, and the class part is their direct sum
        chi_ids = (1, 2) if p % 3 == 1 else (1,)
        invs, verdicts = [], []
        for cid in chi_ids:
            rec = _fitting(ell, p, 3, cache_dir,
                           _cache_load(cache_dir, p, 3, cid), chi_id=cid)
            R = rec.ring()
            inv = iwasawa.eigenspace_class_invariants(R, rec.ideal(R))
            if inv:
                invs.extend(inv)
                verdicts.append(
                    cr.classify(field, p, class_invariants=inv, fitting=rec))
        if not invs:
            return None
        verdict = _merge_verdicts(verdicts, invs)
        return _record(ell, "cyclic-cubic", p, verdict, started,
                       tuple(sorted(invs)))
    except (StabilizationFailure, PrecisionTooLow, CapitulaError) as exc:
        return _error_record(ell, "cyclic-cubic", p, exc, started)


def _run_scan(worker, tasks, jobs):
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(worker, tasks, chunksize=4))
    else:
        results = [worker(t) for t in tasks]
    return [r for r in results if r is not None]


def scan_quadratic(p, residue, modulus, ell_max, jobs=1, cache=None):
    """Records for primes ell = residue (mod modulus), ell < ell_max, whose
    real quadratic field Q(sqrt(ell)) has a nontrivial p-class part."""
    tasks = [(ell, p, cache) for ell in range(residue, ell_max, modulus)
             if ell > 4 and is_prime(ell)]
    return _run_scan(_scan_quadratic_one, tasks, jobs)


def scan_cubic(p, ell_max, jobs=1, cache=None):
    """Records for cubic fields of prime conductor ell = 1 (mod 3),
    ell < ell_max, with nontrivial p-part of the chi-eigenspace."""
    tasks = [(ell, p, cache) for ell in range(7, ell_max, 3)
             if is_prime(ell)]
    return _run_scan(_scan_cubic_one, tasks, jobs)


def survey_imaginary(bound=100):
    """One record per fundamental discriminant -bound < d < 0, verdicts for
    capitulation of the full class group in Q(zeta_|d|)."""
    out = []
    for d in range(-3, -bound, -1):
        if not quadforms.is_fundamental(d):
            continue
        started = time.monotonic()
        group = quadforms.class_group(d)
        verdict = cr.classify(cr.quadratic_imaginary_field(d), "all",
                              class_invariants=group.invariants)
        out.append(_record(-d, "quadratic-imaginary", "all", verdict,
                           started, group.invariants))
    return out


# ---------------------------------------------------------------------------
# reports


def _aggregate(records):
    counts = {}
    for r in records:
        counts[r.status] = counts.get(r.status, 0) + 1
    maximal = sum(1 for r in records if "maximal_capitulation" in r.certificates)
    return counts, maximal


def report(records, fmt, path=None):
    """Render records (sorted by ell) as csv, json, or md-table; byte-
    deterministic for identical inputs."""
    records = sorted(records, key=lambda r: (r.ell, str(r.p), r.kind))
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            buf.write(",".join(r.row()) + "\n")
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps(
            [dict(zip(CSV_COLUMNS, r.row())) for r in records], indent=0
        ) + "\n"
    elif fmt == "md-table":
        counts, maximal = _aggregate(records)
        lines = ["| " + " | ".join(CSV_COLUMNS) + " |",
                 "|" + "---|" * len(CSV_COLUMNS)]
        for r in records:
            lines.append("| " + " | ".join(r.row()) + " |")
        lines.append("")
        lines.append(f"nontrivial: {len(records)}")
        for status in sorted(counts):
            lines.append(f"{status}: {counts[status]}")
        lines.append(f"maximal: {maximal}")
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown format: {fmt}")
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def ingest_report(path):
    """Inverse of report(..., "csv"/"json")."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        rows = [[doc[c] for c in CSV_COLUMNS] for doc in json.loads(text)]
    else:
        lines = [ln for ln in text.splitlines() if ln]
        rows = [ln.split(",") for ln in lines[1:]]
    return [SurveyRecord.from_row(r) for r in rows]


# ---------------------------------------------------------------------------
# argument parsing and subcommands


def _build_parser():
    top = argparse.ArgumentParser(prog="capitula")
    top.add_argument("--format", default="csv",
                     choices=("csv", "json", "md-table"))
    top.add_argument("--seed", type=int, default=0)
    top.add_argument("--cache", default=None)
    top.add_argument("--jobs", type=int, default=1)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classgroup")
    p.add_argument("--disc", type=int, required=True)
    p = sub.add_parser("unit")
    p.add_argument("--disc", type=int, required=True)
    p = sub.add_parser("visible")
    p.add_argument("--disc", type=int, required=True)
    p.add_argument("--d1", type=int, required=True)
    p = sub.add_parser("fitting")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--chi", type=int, required=True)
    p.add_argument("--chi-id", type=int, default=1)
    p = sub.add_parser("capitulation")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p = sub.add_parser("period")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--deg", type=int, required=True)
    p = sub.add_parser("scan")
    p.add_argument("--kind", choices=("quad", "cubic"), required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--max", type=int, default=10000)
    p.add_argument("--mod", default=None, help="a:m for ell = a (mod m)")
    p.add_argument("--long-run", action="store_true")
    p = sub.add_parser("ingest")
    p.add_argument("--file", required=True)
    p = sub.add_parser("export")
    p.add_argument("--file", required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--chi", type=int, required=True)
    return top


def main(argv=None, out=None):
    out = out if out is not None else sys.stdout
    args = _build_parser().parse_args(argv)
    cache = args.cache or cycunits.cache_dir()

    if args.command == "classgroup":
        g = quadforms.class_group(args.disc)
        out.write(f"discriminant={g.discriminant} h={g.h} "
                  f"invariants={list(g.invariants)}\n")
    elif args.command == "unit":
        u = quadforms.fundamental_unit(args.disc)
        out.write(f"d={u.d1} x={u.x} y={u.y} norm={u.norm}\n")
    elif args.command == "visible":
        cls, order = quadforms.visible_class(args.disc, args.d1)
        out.write(f"class=({cls.a},{cls.b},{cls.c}) order={order}\n")
    elif args.command == "fitting":
        cached = _cache_load(cache, args.p, args.chi) if cache else {}
        if args.ell in cached and args.chi_id == 1:
            rec = cached[args.ell]
        else:
            rec = cycunits.compute_fitting_ideal(
                args.ell, args.p, args.chi, chi_id=args.chi_id,
                seed=args.seed)
            _cache_append(cache, args.p, args.chi, rec)
        out.write(f"ell={rec.ell} p={rec.p} chi={rec.chi_order} n={rec.n} "
                  f"prec={rec.N} gens=[{','.join(rec.generators)}]\n")
    elif args.command == "capitulation":
        field = cr.quadratic_real_field(args.ell)
        group = quadforms.class_group(args.ell)
        inv = tuple(quadforms.p_part(group, args.p))
        try:
            verdict = cr.classify(field, args.p, class_invariants=inv)
        except InsufficientData:
            cached = _cache_load(cache, args.p, 2) if cache else {}
            rec = _fitting(args.ell, args.p, 2, cache, cached)
            verdict = cr.classify(field, args.p, class_invariants=inv,
                                  fitting=rec)
        out.write(verdict.to_json() + "\n")
    elif args.command == "period":
        poly = fields.period_polynomial(args.ell, args.deg)
        out.write(f"ell={poly.ell} m={poly.m} "
                  f"coefficients={list(poly.coefficients)}\n")
    elif args.command == "scan":
        if args.max > 10000 and not args.long_run:
            raise SystemExit("bounds above 10000 require --long-run")
        if args.kind == "quad":
            residue, modulus = (1, 4)
            if args.mod:
                residue, modulus = (int(x) for x in args.mod.split(":"))
            records = scan_quadratic(args.p, residue, modulus, args.max,
                                     jobs=args.jobs, cache=cache)
        else:
            records = scan_cubic(args.p, args.max, jobs=args.jobs,
                                 cache=cache)
        out.write(report(records, args.format))
    elif args.command == "ingest":
        records = cycunits.ingest_table(args.file)
        out.write(f"ingested {len(records)} records\n")
    elif args.command == "export":
        cached = _cache_load(cache, args.p, args.chi) if cache else {}
        rec = cached.get(args.ell) or cycunits.compute_fitting_ideal(
            args.ell, args.p, args.chi, seed=args.seed)
        cycunits.export_table([rec], args.file)
        out.write(f"exported 1 record to {args.file}\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
