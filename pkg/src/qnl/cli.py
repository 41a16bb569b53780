"""Command-line interface: ``qnl {scan,construct,measure,rho,partition,density}``.

JSON reports go to stdout (and to ``--report`` when given); ``--figures DIR``
additionally renders PNGs.  Exit codes: 0 ok, 1 a certificate check failed,
2 usage, 3 bad parameters, 4 budget, 5 degenerate parameters, 6 retry cap,
7 malformed input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import construction as con
from . import discrepancy as disc
from . import numth, spectral
from .errors import BudgetError, DegenerateParameterError, FormatError, QnlError
from .ff import coset_map, make_field
from .seeds import seed_record
from .tableio import read_table, to_bytes

SCHEMA_ID = "qnl_cert_v1"
EXIT_OK, EXIT_FAILED = 0, 1


def load_schema() -> dict:
    text = resources.files("qnl").joinpath("schema", f"{SCHEMA_ID}.json").read_text()
    return json.loads(text)


def validate_report(report: dict) -> None:
    jsonschema.validate(report, load_schema())


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _report(command, config, result, exit_code, error=None, figures=None) -> dict:
    status = "error" if error else ("ok" if exit_code == EXIT_OK else "failed")
    rep = {"schema": SCHEMA_ID, "command": command, "config": config, "status": status,
           "exit_code": exit_code, "result": result, "error": error}
    if figures:
        rep["figures"] = figures
    return json.loads(dumps(rep))


def _emit(report: dict, path=None, stream=None) -> None:
    validate_report(report)
    text = dumps(report)
    (stream or sys.stdout).write(text)
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


# -- subcommands -------------------------------------------------------------

def cmd_scan(args) -> int:
    rows = [(args.p, r, args.e) for r in numth.scan_r(args.p, args.limit, args.e)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["p", "r", "e_verified"])
    writer.writerows(rows)
    sys.stdout.write(buf.getvalue())
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    return EXIT_OK


def cmd_construct(args) -> tuple[dict, int, list[str]]:
    od = numth.find_odd_degree(args.p, args.t, args.r, args.e, args.epsilon,
                               keep_trajectory=bool(args.figures))
    params = con.ConstructionParams(args.p, args.t, args.r, args.e, od.s, args.epsilon)
    if params.t_blocks == 0:
        raise DegenerateParameterError(f"q(q-1) = {params.q * (params.q - 1)} exceeds v = {params.v}")
    if params.q**params.n > args.max_size:
        raise BudgetError(f"q^n = {params.q}^{params.n} exceeds --max-size {args.max_size}")
    seeds = seed_record(args.seed)
    plan_seed = seeds["stages"]["plan_T"] if args.shuffle_T else None
    built = con.construct(params, plan_seed, seeds["stages"]["f_S"], args.method)
    cert = spectral.certify_construction(built.table, params.v, built.t_mask)
    summary = built.summary()
    data = to_bytes(built.table)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.qnlf").write_bytes(data)
    result = {
        "params": params.as_dict(),
        "seeds": seeds,
        "semiprimitive": numth.semiprimitive_check(args.p, args.r, args.e).as_dict(),
        "odd_degree": {"s": od.s, "achieved_angle": od.achieved_angle, "beta": od.beta,
                       "threshold": od.threshold, "epsilon": od.epsilon},
        "construction": summary,
        "certificate": cert,
        "table_file": "table.qnlf",
        "table_sha256": hashlib.sha256(data).hexdigest(),
    }
    ok = cert["passed"] and summary["S_size_ok"]
    figures = []
    if args.figures:
        from . import plotting
        sctx = spectral.SpectralCtx.for_table(built.table)
        tm = built.t_mask.astype(float)
        spectra = {"f": sctx.transform(built.table.values, 1),
                   "f_T": sctx.transform(built.table.values, 1, tm),
                   "f_S": sctx.transform(built.table.values, 1, 1 - tm)}
        figures.append(plotting.spectrum_histogram(spectra, args.figures,
                                                   envelope=cert["envelopes"]["fS_hat"]["ln"]))
        figures.append(plotting.degree_trajectory(od.angles, od.threshold, args.figures))
    return result, EXIT_OK if ok else EXIT_FAILED, figures


def cmd_measure(args) -> tuple[dict, int, list[str]]:
    table = read_table(args.table)
    rep = spectral.mu_spectral(table)
    result = rep.as_dict()
    result.update({"epsilon": None, "fT_term_max": None, "fS_hat_max": None,
                   "envelopes": None, "checks": {}})
    code = EXIT_OK
    if args.v:
        ctx = make_field(table.p, table.t * table.n, modulus=table.modulus)
        cmap = coset_map(ctx, args.v, table.t)
        plan = con.plan_T(ctx, cmap)
        cert = spectral.certify_construction(table, args.v, con.t_mask(cmap, plan))
        result.update({k: cert[k] for k in ("epsilon", "fT_term_max", "fS_hat_max", "envelopes",
                                            "checks", "bounds")})
        code = EXIT_OK if cert["passed"] else EXIT_FAILED
    if args.bruteforce:
        nl, a, b = spectral.nonlinearity_bruteforce(table)
        result["bruteforce"] = {"nonlinearity": nl, "witness_a": a, "witness_b": b,
                                "agrees": nl == rep.nonlinearity}
        result["checks"]["bruteforce_agrees"] = nl == rep.nonlinearity
        if nl != rep.nonlinearity:
            code = EXIT_FAILED
    figures = []
    if args.figures:
        from . import plotting
        m, _, _ = spectral.maximand(spectral.SpectralCtx.for_table(table), table.values)
        figures.append(plotting.maximand_histogram(m, rep.mu, args.figures))
    return result, code, figures


def cmd_rho(args) -> tuple[dict, int, list[str]]:
    res = spectral.rho_exhaustive(args.q, args.n)
    return res.as_dict(), EXIT_OK, []


def cmd_partition(args) -> tuple[dict, int, list[str]]:
    try:
        text = Path(args.sets).read_text()
        system = disc.parse_sets(text, args.n_points)
    except (OSError, ValueError) as exc:
        raise FormatError(f"cannot parse set file {args.sets}: {exc}") from exc
    part = disc.k_partition(system, args.K, seed=args.seed, method=args.method)
    cert = part.certificate
    env = cert["closed_form_envelope"]["ln"]
    checks = {"measured_le_certified_bound": part.measured_imbalance <= cert["certified_bound"] + 1e-9}
    if env is not None:
        checks["measured_le_closed_form_envelope"] = part.measured_imbalance <= env
    result = {"N": system.n_points, "M": system.n_sets, "K": args.K, "block": part.block,
              "measured_imbalance": part.measured_imbalance, "certificate": cert, "checks": checks}
    figures = []
    if args.figures:
        from . import plotting
        devs = disc.imbalance_matrix(system.augmented(), part) / args.K
        figures.append(plotting.partition_deviations(devs, cert["certified_bound"], args.figures))
    return result, EXIT_OK if all(checks.values()) else EXIT_FAILED, figures


def cmd_density(args) -> tuple[dict, int, list[str]]:
    result = {}
    if args.p is not None:
        result["p"] = args.p
        result["artin_constant"] = numth.artin_constant(args.prime_limit)
        result["density"] = numth.moree_density(args.p, args.prime_limit)
    figures = []
    if args.r_list:
        ds = numth.density_recursion(args.r_list)
        result["r_list"] = args.r_list
        result["d"] = [str(d) for d in ds]
        result["d_float"] = [float(d) for d in ds]
        if args.figures:
            from . import plotting
            figures.append(plotting.density_steps(result["d_float"], [str(r) for r in args.r_list],
                                                  args.figures))
    return result, EXIT_OK, figures


# -- parser ------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qnl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("scan", help="primes r for which -p is a primitive root mod r^e")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--limit", type=int, required=True)
    sp.add_argument("--e", type=int, default=2, help="prime-power exponent verified (default 2)")
    sp.add_argument("--out", help="also write the CSV here")
    sp.set_defaults(func=cmd_scan)

    def common(p):
        p.add_argument("--report", help="also write the JSON report here")
        p.add_argument("--figures", metavar="DIR", help="render PNG figures into DIR")

    sp = sub.add_parser("construct", help="build and certify a function table")
    for name in ("p", "t", "r", "e"):
        sp.add_argument(f"--{name}", type=int, required=True)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, help="output directory for table.qnlf")
    sp.add_argument("--method", choices=["partition", "random_spectral"], default=None)
    sp.add_argument("--shuffle-T", dest="shuffle_T", action="store_true",
                    help="seeded orbit order for T instead of the deterministic one")
    sp.add_argument("--max-size", dest="max_size", type=int, default=spectral.MAX_SPECTRAL_SIZE)
    common(sp)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("measure", help="nonlinearity of a QNLF table")
    sp.add_argument("table")
    sp.add_argument("--v", type=int, default=None,
                    help="also certify against the default coset plan of index v")
    sp.add_argument("--bruteforce", action="store_true", help="cross-check by exhaustive distance")
    common(sp)
    sp.set_defaults(func=cmd_measure)

    sp = sub.add_parser("rho", help="exact covering radius by enumeration")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_rho)

    sp = sub.add_parser("partition", help="balanced K-partition of a set system file")
    sp.add_argument("sets", help="one set per line, whitespace- or comma-separated indices")
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-points", dest="n_points", type=int, default=None)
    sp.add_argument("--method", choices=["derandomized", "random_retry"], default="derandomized")
    common(sp)
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("density", help="primitive-root densities")
    sp.add_argument("--p", type=int, default=None)
    sp.add_argument("--r-list", dest="r_list", type=_int_list, default=None)
    sp.add_argument("--prime-limit", dest="prime_limit", type=int, default=10**6)
    common(sp)
    sp.set_defaults(func=cmd_density)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _config(args)
    if args.command == "density" and args.p is None and not args.r_list:
        parser.error("density needs --p and/or --r-list")
    try:
        if args.command == "scan":
            return cmd_scan(args)
        result, code, figures = args.func(args)
    except QnlError as exc:
        err = {"type": type(exc).__name__, "message": str(exc)}
        _emit(_report(args.command, config, None, exc.exit_code, err), getattr(args, "report", None))
        return exc.exit_code
    _emit(_report(args.command, config, result, code, figures=figures), getattr(args, "report", None))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
