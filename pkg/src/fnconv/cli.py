"""Command-line front end.

Exit codes: 0 pass, 1 mathematical violation witnessed, 2 invalid input or usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import AlgebraSpec, Element, random_density, uniform_density
from .convolution import (
    Antipode,
    AxiomError,
    ConvolutionStructure,
    FNAlgebra,
    GroupTableError,
    build_fusion_bialgebra,
    build_group_algebra,
    build_theta_swap,
    build_unitary_convolution,
    check_antipode,
    check_associativity,
    check_frobenius,
    check_good_convolution,
)
from .fusion import FusionRing, FusionRingError, search_comult_violation, search_schur_violation, validate
from .inequalities import (
    NormalizationError,
    SweepConfig,
    qeci_suite,
    reverse_young_suite,
    sumset_suite,
    young_sweep,
)
from .reports import SCHEMA_VERSION, Check, Report, dumps, to_markdown
from .smooth import (
    PreconditionError,
    ScopeError,
    conv_continuity_bound,
    continuity_bound,
    smooth_conv_entropy,
    smooth_entropy,
    smooth_qeci_check,
)

EXIT_PASS, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
SUITES = ("young", "reverse-young", "sumset", "qeci", "all")
ENTROPY_OPS = ("smooth", "smooth-entropy", "smooth-conv", "continuity")


class InputError(Exception):
    pass


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("fnconv").joinpath("fixtures", p.name)
    if p.parent.name in ("fixtures", "") and bundled.is_file():
        return Path(str(bundled))
    raise InputError(f"no such file: {path}")


def _load_json(path: str):
    p = _resolve(path)
    try:
        return json.loads(p.read_text())
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


def _spec_report(obj: dict) -> Report:
    try:
        blocks = obj["blocks"]
        pairs = [(b["n"], b["delta"]) for b in blocks]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed algebra spec: {exc}") from exc
    bad_n = [i + 1 for i, (n, _) in enumerate(pairs) if not (isinstance(n, int) and n >= 1)]
    bad_d = [i + 1 for i, (_, d) in enumerate(pairs) if not (isinstance(d, (int, float)) and np.isfinite(d) and d > 0)]
    checks = [
        Check("nonempty", bool(pairs), 0.0 if pairs else 1.0, 0.0),
        Check("block_dimensions", not bad_n, float(len(bad_n)), 0.0, {"blocks": bad_n} if bad_n else None),
        Check("trace_weights", not bad_d, float(len(bad_d)), 0.0, {"blocks": bad_d} if bad_d else None),
    ]
    return Report("algebra_spec_validation", checks, {"blocks": len(pairs)})


def _load_ring(obj) -> FusionRing:
    try:
        return FusionRing.from_json(obj)
    except FusionRingError as exc:
        raise InputError(str(exc)) from exc


def load_algebra(obj, samples: int, seed: int, tol: float):
    """Build ``(structure, antipode or None, label)`` from an input document.

    Accepted forms: a fusion ring, ``{"cayley": table}``,
    ``{"theta_swap": {"theta": t, "n": n}}``,
    ``{"unitary": {"n": n, "U": [[re, im], ...]}}`` and
    ``{"structure": ..., "antipode": ...}``.
    """
    if not isinstance(obj, dict):
        raise InputError("input must be a JSON object")
    try:
        if "N" in obj:
            ring = _load_ring(obj)
            F = build_fusion_bialgebra(ring, samples, seed)
            return F.structure, F.antipode, F.name
        if "cayley" in obj:
            F = build_group_algebra(obj["cayley"], samples, seed)
            return F.structure, F.antipode, F.name
        if "theta_swap" in obj:
            t = obj["theta_swap"]
            return build_theta_swap(float(t["theta"]), int(t["n"])), None, f"theta-swap theta={t['theta']} n={t['n']}"
        if "unitary" in obj:
            u = obj["unitary"]
            n = int(u["n"])
            U = np.array([complex(a, b) for a, b in u["U"]]).reshape(n * n, n * n)
            return build_unitary_convolution(U, n), None, f"unitary convolution n={n}"
        if "structure" in obj:
            S = ConvolutionStructure.from_json(obj["structure"])
            rho = Antipode.from_json(S.spec, obj["antipode"]) if obj.get("antipode") else None
            return S, rho, obj.get("name", "convolution structure")
    except (GroupTableError, FusionRingError) as exc:
        raise InputError(str(exc)) from exc
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, AxiomError):
            raise
        raise InputError(f"malformed algebra input: {exc}") from exc
    raise InputError("unrecognized input: expected a fusion ring, cayley table, theta_swap, unitary or structure")


def _emit(args, payload: dict) -> None:
    text = dumps(payload) if args.format == "json" else to_markdown(payload)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _manifest(args, **extra) -> dict:
    m = {
        "command": args.command,
        "inputs": [args.path],
        "seed": args.seed,
        "tol": args.tol,
        "threads": args.threads,
        "tool_version": __version__,
    }
    m.update(extra)
    return m


def _payload(args, manifest: dict, reports: list, verdict: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "verdict": verdict,
        "manifest": manifest,
        "reports": [r.to_json() if hasattr(r, "to_json") else r for r in reports],
    }


# -- sub-commands -------------------------------------------------------------------


def cmd_validate(args) -> int:
    obj = _load_json(args.path)
    if not isinstance(obj, dict):
        raise InputError("input must be a JSON object")
    if "N" in obj:
        rep = validate(_load_ring(obj))
    elif "blocks" in obj:
        rep = _spec_report(obj)
    else:
        raise InputError("expected a fusion ring (key 'N') or an algebra spec (key 'blocks')")
    _emit(args, _payload(args, _manifest(args), [rep], rep.verdict))
    for c in rep.failed():
        where = (c.witness or {}).get("failures", (c.witness or {}).get("blocks", []))[:5]
        print(f"failed identity: {c.name} ({c.note}) at {where}", file=sys.stderr)
    return EXIT_PASS if rep.passed else EXIT_VIOLATION


def cmd_categorify(args) -> int:
    ring = _load_ring(_load_json(args.path))
    rep = validate(ring)
    if not rep.passed:
        raise InputError("fusion ring fails validation: " + ", ".join(c.name for c in rep.failed()))
    comult = search_comult_violation(ring, args.budget, args.seed, threads=args.threads)
    schur = search_schur_violation(ring, args.budget, args.seed, threads=args.threads)
    obstructed = comult.violation or schur.violation
    verdict = "obstruction" if obstructed else "no obstruction found"
    _emit(args, _payload(args, _manifest(args, budget=args.budget), [comult, schur], verdict))
    return EXIT_VIOLATION if obstructed else EXIT_PASS


def cmd_axioms(args) -> int:
    obj = _load_json(args.path)
    try:
        S, rho, label = load_algebra(obj, args.samples, args.seed, args.tol)
    except AxiomError as exc:
        payload = _payload(args, _manifest(args, samples=args.samples), [
            {"report": "axioms", "verdict": "fail", "axiom": exc.axiom, "witness": exc.witness, "message": str(exc)}
        ], "fail")
        _emit(args, payload)
        return EXIT_VIOLATION
    reports = [check_good_convolution(S, args.samples, args.seed, args.tol, args.threads)]
    if rho is not None:
        reports.append(check_frobenius(S, rho, args.samples, args.seed, args.tol))
        reports.append(check_antipode(rho, args.samples, args.seed, args.tol))
    assoc = check_associativity(S, args.samples, args.seed, args.tol)
    assoc.info["informational"] = True
    ok = all(r.passed for r in reports)
    payload = _payload(args, _manifest(args, samples=args.samples, algebra=label), reports + [assoc],
                       "pass" if ok else "fail")
    _emit(args, payload)
    return EXIT_PASS if ok else EXIT_VIOLATION


def _fn_or_structure(S, rho, samples, seed, tol):
    if rho is None:
        return S
    return FNAlgebra.assemble(S, rho, min(samples, 32), seed, tol)


def cmd_inequalities(args) -> int:
    if args.suite not in SUITES:
        raise InputError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    obj = _load_json(args.path)
    cfg = SweepConfig(n_samples=args.samples, seed=args.seed, tol=args.tol)
    if args.config:
        try:
            cfg = SweepConfig.from_json({**cfg.to_json(), **_load_json(args.config)})
        except TypeError as exc:
            raise InputError(f"malformed sweep config: {exc}") from exc
    theta = obj.get("theta_swap", {}).get("theta") if isinstance(obj, dict) else None
    try:
        S, rho, label = load_algebra(obj, cfg.n_samples, cfg.seed, cfg.tol)
        F = _fn_or_structure(S, rho, cfg.n_samples, cfg.seed, cfg.tol)
    except AxiomError as exc:
        raise InputError(f"input is not an FN algebra: {exc}") from exc
    suites = ("young", "reverse-young", "sumset", "qeci") if args.suite == "all" else (args.suite,)
    reports = []
    for name in suites:
        if name == "young":
            reports.append(young_sweep(F, cfg, args.threads))
        elif name == "reverse-young":
            reports.append(reverse_young_suite(F, cfg.n_samples, cfg.seed, cfg.tol))
        elif name == "sumset":
            reports.append(sumset_suite(F, cfg.n_samples, cfg.seed, cfg.tol))
        else:
            reports.append(qeci_suite(F, cfg.n_samples, cfg.seed, theta, cfg.tol))
    ok = all(r.passed for r in reports)
    manifest = _manifest(args, suite=args.suite, config=cfg.to_json(), algebra=label)
    _emit(args, _payload(args, manifest, reports, "pass" if ok else "violation"))
    return EXIT_PASS if ok else EXIT_VIOLATION


def _element(spec: AlgebraSpec, val, k: float, seed: int, index: int) -> Element:
    target = 1.0 / k
    if val in (None, "uniform"):
        return uniform_density(spec, target)
    if val == "random":
        return random_density(spec, seed, index, 50, trace_value=target)
    if isinstance(val, list):
        return Element.from_json(spec, val)
    raise InputError(f"element must be 'uniform', 'random' or block data, got {val!r}")


def _exponent(v) -> float:
    return np.inf if v in ("inf", None) else float(v)


def cmd_entropy(args) -> int:
    if args.op not in ENTROPY_OPS:
        raise InputError(f"unknown op {args.op!r}; choose from {', '.join(ENTROPY_OPS)}")
    obj = _load_json(args.path)
    params = {}
    if args.params:
        try:
            params = json.loads(args.params) if args.params.lstrip().startswith("{") else _load_json(args.params)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed --params: {exc}") from exc
    p = _exponent(params.get("p", 1))
    q = _exponent(params.get("q", p))
    eps = float(params.get("eps", params.get("ε", 0.0)))
    eta = float(params.get("eta", params.get("η", eps)))
    budget = int(params.get("budget", args.budget))
    try:
        S, rho, label = load_algebra(obj, 32, args.seed, args.tol)
    except AxiomError as exc:
        raise InputError(f"input is not an FN algebra: {exc}") from exc
    F = _fn_or_structure(S, rho, 32, args.seed, args.tol)
    x = _element(S.spec, params.get("x"), S.k, args.seed, 0)
    y = _element(S.spec, params.get("y"), S.k, args.seed, 1)
    manifest = _manifest(args, op=args.op, params=params, budget=budget, algebra=label)
    if args.op == "smooth":
        rep = smooth_qeci_check(F, x, y, p, q, eps, eta, budget, args.seed, args.tol)
        _emit(args, _payload(args, manifest, [rep], rep.verdict))
        return EXIT_PASS if rep.passed else EXIT_VIOLATION
    if args.op == "smooth-entropy":
        res = smooth_entropy(x, p, eps)
        out = {"report": "smooth_entropy", "value": res.value, "distance": res.distance,
               "witness": res.witness.to_json(), "info": res.info}
    elif args.op == "smooth-conv":
        res = smooth_conv_entropy(F, x, y, p, q, eps, eta, budget, args.seed)
        out = {"report": "smooth_conv_entropy", "upper_bound": res.value, "z": res.z.to_json(),
               "w": res.w.to_json(), "semantics": "upper bound on an infimum", "info": res.info}
    else:
        d, lam, k = S.spec.d, S.spec.lam, S.k
        h = float(params.get("h", 1.0 / k + d + 1.0))
        out = {"report": "continuity", "h": h, "B_p": continuity_bound(d, lam, h, p, eps)}
        if eps + eta > 0:
            out["B_conv"] = conv_continuity_bound(d, lam, h, k, p, q, eps, eta)
    _emit(args, _payload(args, manifest, [out], "computed"))
    return EXIT_PASS


COMMANDS = {
    "validate": cmd_validate,
    "categorify": cmd_categorify,
    "axioms": cmd_axioms,
    "inequalities": cmd_inequalities,
    "entropy": cmd_entropy,
}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    parser.add_argument("--tol", type=float, default=d(1e-9), help="verdict tolerance (default 1e-9)")
    parser.add_argument("--threads", type=int, default=d(1), help="worker threads (default 1)")
    parser.add_argument("--out", default=d(None), help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "markdown"), default=d("json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fnconv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = sub.add_parser("validate", parents=[common], help="validate a fusion ring or algebra spec")
    p.add_argument("path")

    p = sub.add_parser("categorify", parents=[common], help="run both categorification criteria")
    p.add_argument("path")
    p.add_argument("--budget", type=int, default=64, help="search starts (default 64)")

    p = sub.add_parser("axioms", parents=[common], help="check the FN algebra axioms")
    p.add_argument("path")
    p.add_argument("--samples", type=int, default=100, help="random samples (default 100)")

    p = sub.add_parser("inequalities", parents=[common], help="run an inequality suite")
    p.add_argument("path")
    p.add_argument("--suite", default="all", help=f"one of {', '.join(SUITES)}")
    p.add_argument("--config", help="SweepConfig JSON file")
    p.add_argument("--samples", type=int, default=500, help="samples per suite (default 500)")

    p = sub.add_parser("entropy", parents=[common], help="smooth entropy computations")
    p.add_argument("path")
    p.add_argument("--op", default="smooth", help=f"one of {', '.join(ENTROPY_OPS)}")
    p.add_argument("--params", help="JSON object or file: p, q, eps, eta, x, y, budget, h")
    p.add_argument("--budget", type=int, default=64, help="search starts (default 64)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, PreconditionError, ScopeError, NormalizationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
