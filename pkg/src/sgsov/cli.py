"""Command-line driver: ``sgsov verify|spectrum|baxter|tau2|sweep``.

Exit codes: 0 all checks pass, 1 some check failed, 2 bad usage,
3 degeneracy persisted through every resample, 4 I/O error.
"""

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import baxter as bx
from . import reports, suites, tau2
from .config import DEFAULT_TOL, dim_cap
from .errors import DegeneracyError, NotApplicableError, ParameterError, SgsovError
from .model import ModelParams, sample_params
from .spectrum import diagonalize_transfer

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DEGENERATE, EXIT_IO = 0, 1, 2, 3, 4
RESAMPLE_STRIDE = 7919


@dataclass
class RunConfig:
    l: int = 1
    lprime: int = 1
    N: int = 2
    seed: int = 0
    params_file: str | None = None
    suite: list = field(default_factory=lambda: ["all"])
    tol_abs: float | None = None
    tol_rel: float | None = None
    retries: int = 5
    out: str | None = None
    fmt: str = "json"
    untwisted: bool = False

    def __post_init__(self):
        if self.params_file is not None and not Path(self.params_file).is_file():
            raise ParameterError(f"parameter file {self.params_file} does not exist")
        suites.resolve(self.suite)
        if self.params_file is None and (2 * self.l + 1) ** self.N > dim_cap():
            raise ParameterError(f"p**N = {(2 * self.l + 1) ** self.N} exceeds the dimension cap {dim_cap()}")

    @property
    def tol(self):
        return DEFAULT_TOL.with_overrides(abs=self.tol_abs, rel=self.tol_rel)

    def echo(self):
        return {"l": self.l, "lprime": self.lprime, "N": self.N, "seed": self.seed,
                "params_file": self.params_file, "suite": list(self.suite),
                "tol_abs": self.tol_abs, "tol_rel": self.tol_rel, "retries": self.retries,
                "twisted": not self.untwisted}


def load_params(cfg, attempt=0):
    if cfg.params_file is not None:
        return ModelParams.from_json(Path(cfg.params_file).read_text())
    seed = cfg.seed + RESAMPLE_STRIDE * attempt
    return sample_params(cfg.l, cfg.N, seed, lprime=cfg.lprime, twisted=not cfg.untwisted)


def with_resampling(cfg, job):
    """Run ``job(params)``, redrawing parameters on degeneracy errors.

    Returns ``(result, params, resamples, degeneracies)``; ``result`` is None
    when every attempt was degenerate.
    """
    notes = []
    attempts = 1 if cfg.params_file is not None else max(1, cfg.retries + 1)
    for attempt in range(attempts):
        try:
            params = load_params(cfg, attempt)
            return job(params), params, attempt, notes
        except DegeneracyError as exc:
            notes.append(f"attempt {attempt}: {type(exc).__name__}: {exc}")
    return None, None, attempts - 1, notes


def run_suite(cfg):
    """Verification report and exit code for one configuration."""
    def job(params):
        return suites.run(params, cfg.suite, cfg.tol, seed=0)

    out, params, resamples, notes = with_resampling(cfg, job)
    if out is None:
        doc = reports.envelope("verify", cfg.echo(), {"degeneracy": notes, "resamples": resamples})
        return doc, EXIT_DEGENERATE
    checks, ctx = out
    passed = all(c.passed for c in checks)
    results = {"params": params.to_json(), "resamples": resamples, "degeneracy": notes,
               "checks": [c.to_json() for c in checks], "passed": passed,
               "summary": {"total": len(checks), "failed": sum(not c.passed for c in checks)}}
    if "q_rows" in ctx.extras:
        results["baxter"] = [_clean_row(r) for r in ctx.extras["q_rows"]]
    if "tau2" in ctx.extras:
        results["tau2"] = ctx.extras["tau2"]
    if isinstance(ctx.extras.get("baxter"), str):
        results["baxter_note"] = ctx.extras["baxter"]
    return reports.envelope("verify", cfg.echo(), results), EXIT_OK if passed else EXIT_FAIL


def _clean_row(row):
    return {k: v for k, v in row.items() if k != "Q"}


def spectrum_rows(params):
    rows = []
    N = params.N
    for i, r in enumerate(diagonalize_transfer(params, allow_degenerate=not params.twisted)):
        row = {"index": i, "theta_k": r.theta_k, "gap": r.gap, "residual": r.residual}
        coeffs = r.t.padded(-N, N).coeffs.real
        for k, c in zip(range(-N, N + 1), coeffs):
            if k % 2 == 0:
                row[f"t[{k}]"] = float(c)
        rows.append(row)
    return rows


def baxter_rows(params, pseudo=False):
    """One row per eigenvalue: ``k, a_t, b_t`` and the Baxter residuals."""
    ctx = suites.Context(params)
    records = bx.functional_equation_solutions(params, ctx.gauge) if pseudo else ctx.records
    return [_clean_row(suites.q_row(ctx, r)) for r in records]


def _flat(row):
    out = {"theta_k": row["theta_k"], "a_t": row["a_t"], "b_t": row["b_t"]}
    out.update({f"res_{k}": v for k, v in row["residuals"].items()})
    out["error"] = row["error"] or ""
    return out


def _sweep_point(args):
    l, N, seed, suite, retries = args
    cfg = RunConfig(l=l, N=N, seed=seed, suite=suite, retries=retries)
    doc, code = run_suite(cfg)
    res = doc["results"]
    failed = [c["suite"] + "." + c["name"] for c in res.get("checks", []) if not c["passed"]]
    return {"l": l, "N": N, "seed": seed, "exit": code, "resamples": res.get("resamples", 0),
            "failed": ";".join(failed)}


def parse_list(text, cast=int):
    """``"1,2"`` or ``"0..9"`` (inclusive) into a list."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(cast(lo), cast(hi) + 1))
        elif part:
            out.append(cast(part))
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="sgsov", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, grid=False):
        if grid:
            p.add_argument("--l", default="1", help="comma list or a..b range")
            p.add_argument("--N", default="1,2", help="comma list or a..b range")
            p.add_argument("--seeds", default="0", help="comma list or a..b range")
        else:
            p.add_argument("--l", type=int, default=1)
            p.add_argument("--N", type=int, default=2)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--params", dest="params_file", help="parameter JSON file")
            p.add_argument("--untwisted", action="store_true", help="sample untwisted averages")
        p.add_argument("--lprime", type=int, default=1)
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
        p.add_argument("--tol-abs", type=float)
        p.add_argument("--tol-rel", type=float)
        p.add_argument("--retries", type=int, default=5)
        p.add_argument("--workers", type=int, default=1)

    v = sub.add_parser("verify", help="run verification suites")
    common(v)
    v.add_argument("--suite", default="all", help="comma list of: " + ", ".join(suites.ORDER) + ", all")
    common(sub.add_parser("spectrum", help="transfer-matrix eigenvalue polynomials"))
    b = sub.add_parser("baxter", help="Q polynomials and Baxter residuals per eigenvalue")
    common(b)
    b.add_argument("--pseudo", action="store_true",
                   help="use solutions of det D = 0 in the fixed gauge instead of the spectrum")
    common(sub.add_parser("tau2", help="tau2 versus SG spectral comparison"))
    s = sub.add_parser("sweep", help="verify over a parameter grid")
    common(s, grid=True)
    s.add_argument("--suite", default="all")
    return ap


def _config(ns):
    return RunConfig(l=ns.l, lprime=ns.lprime, N=ns.N, seed=ns.seed, params_file=ns.params_file,
                     suite=[x for x in getattr(ns, "suite", "all").split(",") if x],
                     tol_abs=ns.tol_abs, tol_rel=ns.tol_rel, retries=ns.retries,
                     out=ns.out, fmt=ns.fmt, untwisted=ns.untwisted)


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _summary(doc):
    res = doc["results"]
    for c in res.get("checks", []):
        flag = "PASS" if c["passed"] else "FAIL"
        print(f"{flag} {c['suite']}.{c['name']}: {c['value']:.3g} ({c['kind']} {c['bound']:.0e})",
              file=sys.stderr)


def main(argv=None):
    ns = build_parser().parse_args(argv)
    try:
        if ns.verb == "sweep":
            return _main_sweep(ns)
        cfg = _config(ns)
    except (ParameterError, ValueError) as exc:
        print(f"sgsov: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if ns.verb == "verify":
            doc, code = run_suite(cfg)
            _summary(doc)
            if cfg.fmt == "csv":
                text = reports.to_csv(doc["results"].get("checks", []))
            else:
                text = reports.canonical_json(doc) + "\n"
            _write(text, cfg.out)
            return code
        if ns.verb == "spectrum":
            rows, params, resamples, notes = with_resampling(cfg, spectrum_rows)
            if rows is None:
                return EXIT_DEGENERATE
            doc = reports.envelope("spectrum", cfg.echo(),
                                   {"params": params.to_json(), "resamples": resamples, "records": rows})
            text = reports.to_csv(rows) if cfg.fmt == "csv" else reports.canonical_json(doc) + "\n"
            _write(text, cfg.out)
            return EXIT_OK
        if ns.verb == "baxter":
            rows, params, resamples, notes = with_resampling(cfg, lambda P: baxter_rows(P, ns.pseudo))
            if rows is None:
                return EXIT_DEGENERATE
            doc = reports.envelope("baxter", cfg.echo(),
                                   {"params": params.to_json(), "resamples": resamples, "rows": rows})
            if cfg.fmt == "csv":
                text = reports.to_csv([_flat(r) for r in rows])
            else:
                text = reports.canonical_json(doc) + "\n"
            _write(text, cfg.out)
            ok = all(r["error"] is None for r in rows)
            return EXIT_OK if ok else EXIT_FAIL
        if ns.verb == "tau2":
            rep, params, resamples, notes = with_resampling(cfg, tau2.spectra_compare)
            if rep is None:
                return EXIT_DEGENERATE
            doc = reports.envelope("tau2", cfg.echo(), {"params": params.to_json(),
                                                        "report": rep.to_json(), **rep.verdict()})
            verdict = rep.verdict()
            text = (reports.to_csv([verdict]) if cfg.fmt == "csv" else reports.canonical_json(doc) + "\n")
            _write(text, cfg.out)
            ok = verdict["untwisted_match"] if rep.untwisted else verdict["twisted_separation"] > 1e-4
            return EXIT_OK if ok else EXIT_FAIL
    except NotApplicableError as exc:
        print(f"sgsov: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"sgsov: {exc}", file=sys.stderr)
        return EXIT_IO
    except SgsovError as exc:
        print(f"sgsov: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_USAGE


def _main_sweep(ns):
    ls, Ns, seeds = parse_list(ns.l), parse_list(ns.N), parse_list(ns.seeds)
    suite = [x for x in ns.suite.split(",") if x]
    suites.resolve(suite)
    grid, skipped = [], []
    for l in ls:
        for N in Ns:
            if (2 * l + 1) ** N > dim_cap():
                skipped.append({"l": l, "N": N})
                continue
            grid.extend((l, N, s, suite, ns.retries) for s in seeds)
    if ns.workers > 1:
        with ProcessPoolExecutor(max_workers=ns.workers) as pool:
            rows = list(pool.map(_sweep_point, grid))
    else:
        rows = [_sweep_point(g) for g in grid]
    table = {}
    for r in rows:
        key = (r["l"], r["N"])
        ok, n = table.get(key, (0, 0))
        table[key] = (ok + (r["exit"] == 0), n + 1)
    rates = [{"l": l, "N": N, "passed": ok, "runs": n, "pass_rate": ok / n}
             for (l, N), (ok, n) in sorted(table.items())]
    for r in rates:
        print(f"l={r['l']} N={r['N']}: {r['passed']}/{r['runs']} passed", file=sys.stderr)
    config = {"l": ls, "N": Ns, "seeds": seeds, "suite": suite, "retries": ns.retries}
    doc = reports.envelope("sweep", config, {"points": rows, "pass_rates": rates, "skipped": skipped})
    text = reports.to_csv(rows) if ns.fmt == "csv" else reports.canonical_json(doc) + "\n"
    try:
        _write(text, ns.out)
    except OSError as exc:
        print(f"sgsov: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if all(r["exit"] == 0 for r in rows) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
