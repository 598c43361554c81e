"""Command-line interface: parse job documents, dispatch computations, emit
deterministic reports.

Jobs are JSON documents with explicit rational coefficients (never floats);
reports are byte-identical across runs for identical inputs.  Exit codes:
0 success, 1 validated mathematical failure (witness in the report),
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    ConnectionNotFlat,
    DerfolError,
    NotALieAlgebroid,
    NotDifferentialIdeal,
    NotFlat,
    NotIsolated,
    ParseError,
    SchemaError,
    Unsupported,
)
from .forms import FormMatrix, PolyForm
from .poly import MultiPoly

SCHEMA_VERSION = "1"
KINDS = ("pfaffian", "integrable", "lie_algebroid", "de_rham", "punctual", "crystal", "singularity")
COMMANDS = ("check", "classify", "truncate", "cohomology", "crystal-cohomology", "compare", "singularity")

DEFAULT_CUTOFFS = {"weight": 4, "poly_degree": 8, "jet_bound": 12}


@dataclass
class JobDocument:
    schema_version: str
    kind: str
    variables: list
    payload: dict
    cutoffs: dict

    @property
    def n(self):
        return len(self.variables)


# ---------------------------------------------------------------------------
# parsing and validation


def _expect(cond, message, path):
    if not cond:
        raise SchemaError(message, path=path)


def parse_poly(doc, num_vars, path) -> MultiPoly:
    _expect(isinstance(doc, list), "polynomial must be a list of terms", path)
    terms = {}
    for i, term in enumerate(doc):
        tpath = f"{path}/{i}"
        _expect(isinstance(term, dict), "term must be an object", tpath)
        for key in ("exponents", "numerator", "denominator"):
            _expect(key in term, f"missing field {key!r}", tpath)
        expo = term["exponents"]
        _expect(
            isinstance(expo, list) and all(isinstance(e, int) and e >= 0 for e in expo),
            "exponents must be nonnegative integers",
            f"{tpath}/exponents",
        )
        _expect(
            len(expo) == num_vars,
            f"exponent vector has length {len(expo)}, expected {num_vars}",
            f"{tpath}/exponents",
        )
        num, den = term["numerator"], term["denominator"]
        _expect(isinstance(num, int), "numerator must be an integer", f"{tpath}/numerator")
        _expect(
            isinstance(den, int) and den != 0,
            "denominator must be a nonzero integer",
            f"{tpath}/denominator",
        )
        key = tuple(expo)
        terms[key] = terms.get(key, Fraction(0)) + Fraction(num, den)
    return MultiPoly(num_vars, terms)


def parse_form(doc, num_vars, path) -> PolyForm:
    _expect(isinstance(doc, list), "form must be a list of components", path)
    terms = {}
    degree = None
    for i, comp in enumerate(doc):
        cpath = f"{path}/{i}"
        _expect(isinstance(comp, dict), "form component must be an object", cpath)
        _expect("indices" in comp and "coefficient" in comp, "need indices and coefficient", cpath)
        idx = comp["indices"]
        _expect(
            isinstance(idx, list) and all(isinstance(a, int) for a in idx),
            "indices must be integers",
            f"{cpath}/indices",
        )
        _expect(
            all(0 <= a < num_vars for a in idx),
            "index out of range",
            f"{cpath}/indices",
        )
        _expect(list(idx) == sorted(set(idx)), "indices must be strictly increasing", f"{cpath}/indices")
        if degree is None:
            degree = len(idx)
        _expect(len(idx) == degree, "mixed form degrees", f"{cpath}/indices")
        coeff = parse_poly(comp["coefficient"], num_vars, f"{cpath}/coefficient")
        S = tuple(idx)
        prev = terms.get(S)
        terms[S] = coeff if prev is None else prev + coeff
    return PolyForm(num_vars, degree if degree is not None else 1, terms)


def parse_job_dict(doc, path="") -> JobDocument:
    _expect(isinstance(doc, dict), "job document must be an object", path or "/")
    _expect("schema_version" in doc, "missing schema_version", "/schema_version")
    _expect(
        doc["schema_version"] == SCHEMA_VERSION,
        f"unrecognized schema_version {doc['schema_version']!r}",
        "/schema_version",
    )
    _expect("kind" in doc, "missing kind", "/kind")
    _expect(doc["kind"] in KINDS, f"unknown kind {doc['kind']!r}", "/kind")
    variables = doc.get("variables", [])
    _expect(
        isinstance(variables, list) and all(isinstance(v, str) for v in variables),
        "variables must be a list of names",
        "/variables",
    )
    _expect(len(set(variables)) == len(variables), "duplicate variable names", "/variables")
    payload = doc.get("payload", {})
    _expect(isinstance(payload, dict), "payload must be an object", "/payload")
    cutoffs = dict(DEFAULT_CUTOFFS)
    raw = doc.get("cutoffs", {})
    _expect(isinstance(raw, dict), "cutoffs must be an object", "/cutoffs")
    for key, v in raw.items():
        _expect(key in DEFAULT_CUTOFFS, f"unknown cutoff {key!r}", f"/cutoffs/{key}")
        _expect(isinstance(v, int) and v >= 0, "cutoff must be a nonnegative integer", f"/cutoffs/{key}")
        cutoffs[key] = v
    return JobDocument(
        schema_version=doc["schema_version"],
        kind=doc["kind"],
        variables=variables,
        payload=payload,
        cutoffs=cutoffs,
    )


def parse_job(path: str) -> JobDocument:
    try:
        with open(path, "rb") as fh:
            raw = fh.read().decode("utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not UTF-8: {exc}")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}")
    return parse_job_dict(doc)


# ---------------------------------------------------------------------------
# building objects from jobs


def build_foliation(job: JobDocument):
    from . import (
        de_rham_foliation,
        integrable_foliation,
        lie_algebroid_foliation,
        pfaffian_foliation,
        punctual_foliation,
    )

    n = job.n
    payload = job.payload
    if job.kind == "de_rham":
        return de_rham_foliation(n)
    if job.kind == "punctual":
        return punctual_foliation(n)
    if job.kind == "integrable":
        _expect("map" in payload, "integrable payload needs a map", "/payload/map")
        comps = payload["map"]
        _expect(isinstance(comps, list) and comps, "map must be a nonempty list", "/payload/map")
        polys = [parse_poly(c, n, f"/payload/map/{i}") for i, c in enumerate(comps)]
        return integrable_foliation(polys)
    if job.kind == "pfaffian":
        _expect("forms" in payload, "pfaffian payload needs forms", "/payload/forms")
        forms = [
            parse_form(f, n, f"/payload/forms/{i}") for i, f in enumerate(payload["forms"])
        ]
        for i, w in enumerate(forms):
            _expect(w.form_degree == 1, "Pfaffian generators must be 1-forms", f"/payload/forms/{i}")
        k = len(forms)
        W = None
        if "connection" in payload and payload["connection"] is not None:
            rows = payload["connection"]
            _expect(
                isinstance(rows, list) and len(rows) == k,
                f"connection must be a {k}x{k} matrix",
                "/payload/connection",
            )
            entries = {}
            for i, row in enumerate(rows):
                _expect(
                    isinstance(row, list) and len(row) == k,
                    f"connection row {i} must have {k} entries",
                    f"/payload/connection/{i}",
                )
                for j, cell in enumerate(row):
                    w = parse_form(cell, n, f"/payload/connection/{i}/{j}")
                    if not w.is_zero():
                        _expect(
                            w.form_degree == 1,
                            "connection entries must be 1-forms",
                            f"/payload/connection/{i}/{j}",
                        )
                        entries[(i, j)] = w
            W = FormMatrix(k, k, n, 1, entries)
        return pfaffian_foliation(n, forms, W)
    if job.kind == "lie_algebroid":
        _expect("rank" in payload, "lie_algebroid payload needs rank", "/payload/rank")
        r = payload["rank"]
        _expect(isinstance(r, int) and r >= 0, "rank must be a nonnegative integer", "/payload/rank")
        anchor = payload.get("anchor", [[[] for _ in range(n)] for _ in range(r)])
        _expect(
            isinstance(anchor, list) and len(anchor) == r,
            f"anchor must have {r} rows",
            "/payload/anchor",
        )
        rho = []
        for i, row in enumerate(anchor):
            _expect(
                isinstance(row, list) and len(row) == n,
                f"anchor row {i} must have {n} entries",
                f"/payload/anchor/{i}",
            )
            rho.append([parse_poly(c, n, f"/payload/anchor/{i}/{a}") for a, c in enumerate(row)])
        zero = MultiPoly.zero(n)
        c = [[[zero for _ in range(r)] for _ in range(r)] for _ in range(r)]
        for t, item in enumerate(payload.get("structure", [])):
            tpath = f"/payload/structure/{t}"
            _expect(isinstance(item, dict), "structure entry must be an object", tpath)
            for key in ("i", "j", "l", "value"):
                _expect(key in item, f"missing field {key!r}", tpath)
            i, j, l = item["i"], item["j"], item["l"]
            _expect(
                all(isinstance(v, int) and 0 <= v < r for v in (i, j, l)),
                "structure indices out of range",
                tpath,
            )
            val = parse_poly(item["value"], n, f"{tpath}/value")
            c[i][j][l] = c[i][j][l] + val
            c[j][i][l] = c[j][i][l] - val
        return lie_algebroid_foliation(n, r, rho, c)
    raise SchemaError(f"kind {job.kind!r} does not describe a foliation", path="/kind")


def build_crystal(job: JobDocument):
    from .crystal import Crystal, d_module_crystal, lie_rep_crystal, trivial_crystal

    payload = job.payload
    _expect("base" in payload, "crystal payload needs a base foliation", "/payload/base")
    base_doc = dict(payload["base"])
    base_doc.setdefault("schema_version", job.schema_version)
    base_doc.setdefault("variables", job.variables)
    base_job = parse_job_dict(base_doc)
    _expect(
        base_job.kind != "crystal" and base_job.kind != "singularity",
        "crystal base must be a foliation kind",
        "/payload/base/kind",
    )
    F = build_foliation(base_job)
    n = job.n
    style = payload.get("connection_kind", "trivial")
    if style == "trivial":
        rank = payload.get("rank", 1)
        _expect(isinstance(rank, int) and rank >= 1, "rank must be a positive integer", "/payload/rank")
        return trivial_crystal(F, rank)
    _expect("matrices" in payload, "crystal payload needs matrices", "/payload/matrices")
    mats_doc = payload["matrices"]
    count = n if style == "d_module" else F.m
    _expect(
        isinstance(mats_doc, list) and len(mats_doc) == count,
        f"need one matrix per generator ({count})",
        "/payload/matrices",
    )
    mats = []
    for a, M in enumerate(mats_doc):
        mpath = f"/payload/matrices/{a}"
        _expect(isinstance(M, list) and M, "matrix must be a nonempty list of rows", mpath)
        r = len(M)
        rows = []
        for i, row in enumerate(M):
            _expect(
                isinstance(row, list) and len(row) == r,
                "matrix must be square",
                f"{mpath}/{i}",
            )
            rows.append([parse_poly(c, n, f"{mpath}/{i}/{j}") for j, c in enumerate(row)])
        mats.append(rows)
    if style == "d_module":
        _expect(base_job.kind == "de_rham", "d_module crystals live over the de Rham foliation", "/payload/base/kind")
        return d_module_crystal(n, mats)
    if style == "lie_rep":
        return lie_rep_crystal(F, mats)
    raise SchemaError(f"unknown connection_kind {style!r}", path="/payload/connection_kind")


def build_singularity(job: JobDocument) -> MultiPoly:
    payload = job.payload
    _expect("function" in payload, "singularity payload needs a function", "/payload/function")
    return parse_poly(payload["function"], job.n, "/payload/function")


# ---------------------------------------------------------------------------
# running commands


def _degree_reports_doc(rep):
    return {str(q): r.as_dict() for q, r in sorted(rep.items())}


def run(command: str, job: JobDocument) -> dict:
    """Execute one command against a parsed job; returns the report dict.

    The report's status is "ok" for successes and a failure tag (with a
    machine-checkable witness) for validated mathematical failures.
    """
    from . import classify as classify_op
    from . import singular_locus, truncate
    from .foliation import form_to_doc, poly_to_doc

    P = job.cutoffs["weight"]
    D = job.cutoffs["poly_degree"]
    jet = job.cutoffs["jet_bound"]
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "kind": job.kind,
        "variables": job.variables,
        "cutoffs": dict(job.cutoffs),
        "status": "ok",
        "timing": None,
    }
    try:
        if command == "check":
            if job.kind == "crystal":
                build_crystal(job)
                report["result"] = {"valid": True, "object": "crystal"}
            elif job.kind == "singularity":
                build_singularity(job)
                report["result"] = {"valid": True, "object": "singularity"}
            else:
                F = build_foliation(job)
                violations = F.validate(P=min(P, 3), D=min(D, 6))
                report["result"] = {
                    "valid": not violations,
                    "object": "foliation",
                    "violations": [str(v) for v in violations],
                }
                if violations:
                    report["status"] = "invalid"
        elif command == "classify":
            F = build_foliation(job)
            report["result"] = classify_op(F, degree_bound=min(D, 6)).as_dict()
        elif command == "truncate":
            F = build_foliation(job)
            report["result"] = truncate(F, D).as_dict()
            if F.anchor_is_identity:
                report["result"]["singular_locus"] = singular_locus(F, jet).as_dict()
        elif command == "cohomology":
            F = build_foliation(job)
            degrees = list(range(max(F.m - F.k, 0) + 1)) if job.kind != "punctual" else [0]
            rep = F.realized_cohomology(P, D, graded=True, degrees=degrees)
            report["result"] = {"realized_cohomology": _degree_reports_doc(rep)}
        elif command == "crystal-cohomology":
            _expect(job.kind == "crystal", "crystal-cohomology needs a crystal job", "/kind")
            E = build_crystal(job)
            degrees = list(range(max(E.foliation.m - E.foliation.k, 0) + 1))
            rep = E.foliated_cohomology(P, D, graded=True, degrees=degrees)
            report["result"] = {"foliated_cohomology": _degree_reports_doc(rep)}
        elif command == "compare":
            if job.kind == "crystal":
                from .crystal import comparison_report

                E = build_crystal(job)
                rep, codim = comparison_report(E, P, D)
                report["result"] = {
                    "codimension_evidence": codim,
                    "degrees": {str(q): r.as_dict() for q, r in sorted(rep.items())},
                }
            elif job.kind == "singularity":
                from .singularity import twisted_comparison_report

                f = build_singularity(job)
                rep = twisted_comparison_report(f, P=P, D=D, jet_bound=jet)
                report["result"] = rep.as_dict()
            else:
                raise SchemaError("compare needs a crystal or singularity job", path="/kind")
        elif command == "singularity":
            _expect(job.kind == "singularity", "singularity command needs a singularity job", "/kind")
            from .singularity import (
                detect_weights,
                flat_function_cohomology,
                jacobian_ring,
                koszul_stage_cohomology,
                naive_relative_dr,
            )

            f = build_singularity(job)
            jd = jacobian_ring(f, jet)
            weights = detect_weights(f)
            result = {
                "jacobian": jd.as_dict(),
                "quasi_homogeneous_weights": list(weights) if weights else None,
            }
            n = job.n
            result["koszul_top_stage"] = {
                str(q): d
                for q, d in koszul_stage_cohomology(
                    f, n, D * (max(weights) if weights else 1), weights
                ).items()
            }
            result["flat_function_cohomology"] = _degree_reports_doc(
                flat_function_cohomology(f, P, D)
            )
            result["naive_relative_de_rham"] = _degree_reports_doc(naive_relative_dr(f, D))
            report["result"] = result
        else:
            raise SchemaError(f"unknown command {command!r}", path="command")
    except NotDifferentialIdeal as exc:
        report["status"] = "not_differential_ideal"
        report["witness"] = {
            "message": str(exc),
            "index": exc.index,
            "defect_form": form_to_doc(exc.defect) if exc.defect is not None else None,
        }
    except ConnectionNotFlat as exc:
        report["status"] = "connection_not_flat"
        defect = exc.defect
        report["witness"] = {
            "message": str(exc),
            "defect_matrix": [
                [form_to_doc(defect.entry(i, j)) for j in range(defect.cols)]
                for i in range(defect.rows)
            ]
            if defect is not None
            else None,
        }
    except NotALieAlgebroid as exc:
        witness = exc.witness
        doc = None
        if witness is not None:
            doc = [str(w) if not isinstance(w, MultiPoly) else poly_to_doc(w) for w in witness]
        report["status"] = "not_a_lie_algebroid"
        report["witness"] = {"message": str(exc), "instance": doc}
    except NotFlat as exc:
        defect = exc.defect
        doc = None
        if isinstance(defect, list):
            doc = [
                [poly_to_doc(v) if isinstance(v, MultiPoly) else str(v) for v in row]
                for row in defect
            ]
        report["status"] = "not_flat"
        report["witness"] = {
            "message": str(exc),
            "pair": list(exc.witness) if isinstance(exc.witness, tuple) else str(exc.witness),
            "defect": doc,
        }
    except NotIsolated as exc:
        report["status"] = "not_isolated"
        report["witness"] = {"message": str(exc), "jet_dims": exc.dims}
    except Unsupported as exc:
        report["status"] = "unsupported"
        report["witness"] = {"message": str(exc)}
    return report


# ---------------------------------------------------------------------------
# rendering and entry point


def render_table(report: dict) -> str:
    """Human-readable table; deterministic for a fixed report."""
    lines = []
    lines.append(f"command   : {report['command']}")
    lines.append(f"kind      : {report['kind']}")
    lines.append(f"variables : {', '.join(report['variables']) if report['variables'] else '(none)'}")
    c = report["cutoffs"]
    lines.append(
        f"cutoffs   : weight={c['weight']} poly_degree={c['poly_degree']} jet_bound={c['jet_bound']}"
    )
    lines.append(f"status    : {report['status']}")
    if "witness" in report:
        lines.append(f"witness   : {report['witness'].get('message', '')}")
    result = report.get("result")
    if isinstance(result, dict):
        for key in sorted(result):
            value = result[key]
            if isinstance(value, dict) and all(
                isinstance(v, dict) and "dim" in v for v in value.values()
            ):
                lines.append(f"{key}:")
                lines.append("  degree | dim | stable")
                for q in sorted(value, key=lambda s: int(s)):
                    v = value[q]
                    lines.append(f"  {q:>6} | {v['dim']:>3} | {str(v['stable']).lower()}")
                    if v.get("slice_dims") is not None:
                        lines.append(f"         | slices {v['slice_dims']}")
            else:
                lines.append(f"{key}: {json.dumps(value, sort_keys=True)}")
    return "\n".join(lines) + "\n"


def serialize_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="derfol",
        description="Exact computations with derived foliations on affine space.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("job", help="path to a JSON job document")
    parser.add_argument("--out", help="write the JSON report to this path")
    parser.add_argument("--cutoff-weight", type=int, dest="weight")
    parser.add_argument("--cutoff-degree", type=int, dest="poly_degree")
    parser.add_argument("--jet-bound", type=int, dest="jet_bound")
    parser.add_argument("--quiet", action="store_true", help="suppress the stdout table")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0

    started = time.monotonic()
    try:
        job = parse_job(args.job)
        for key in ("weight", "poly_degree", "jet_bound"):
            value = getattr(args, key)
            if value is not None:
                if value < 0:
                    print(f"error: cutoff {key} must be nonnegative", file=sys.stderr)
                    return 2
                job.cutoffs[key] = value
        report = run(args.command, job)
    except (ParseError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DerfolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if not args.quiet:
        sys.stdout.write(render_table(report))
        sys.stderr.write(f"elapsed: {time.monotonic() - started:.3f}s\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(serialize_report(report))
    return 0 if report["status"] == "ok" else 1


if __name__ == "__main__":
    sys.exit(main())
