"""Command-line front end.

    tailcert run CONFIG.json [--out PATH] [--format csv|json] [--jobs N] [--seed-override U64]

Every (job, t) pair becomes one report row. Exit status: 0 when nothing was
violated, 1 if some row is violated, 2 for usage or config errors, 3 if a job
failed numerically (and nothing was violated).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from importlib import resources

import jsonschema
import numpy as np

from .errors import ConfigurationError, DomainError, TailcertError
from .models import CovarianceSpec, MomentProfile, NormSpec, SamplerSpec, mix_seed
from .verify import CSV_COLUMNS, certify

log = logging.getLogger("tailcert")

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

_NEEDS = {
    "theorem2": ("profile", "cov", "sampler"),
    "corollary_subgauss": ("profile", "cov", "sampler"),
    "corollary_subexp": ("profile", "cov", "sampler"),
    "polyhedral": (),
    "linf_gaussian": (),
    "pushforward": ("profile", "cov", "sampler"),
    "psd_sum": ("sampler", "calibration"),
    "sample_cov": ("sampler", "calibration"),
    "matrix_series": ("sampler", "calibration"),
    "coupling": ("sampler", "coupling"),
}
_NORM_KINDS = {
    "theorem2": ("euclidean",),
    "corollary_subgauss": ("euclidean",),
    "corollary_subexp": ("euclidean",),
    "polyhedral": ("sup", "polyhedral"),
    "linf_gaussian": ("sup",),
    "pushforward": ("euclidean", "sup", "polyhedral"),
    "psd_sum": ("symmetric_operator",),
    "sample_cov": ("symmetric_operator",),
    "matrix_series": ("matrix_operator",),
    "coupling": ("euclidean", "sup", "polyhedral"),
}


class UsageError(TailcertError):
    pass


def load_schema() -> dict:
    with resources.files("tailcert").joinpath("schema/config.schema.json").open() as fh:
        return json.load(fh)


def validate_config(config: dict) -> None:
    """Schema check plus per-method field requirements; raises UsageError naming the field path."""
    try:
        jsonschema.validate(config, load_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"config invalid at {path}: {exc.message}") from None
    for i, job in enumerate(config["jobs"]):
        m = job["method"]
        for key in _NEEDS[m]:
            if key not in job:
                raise UsageError(f"config invalid at jobs/{i}/{key}: required by method {m}")
        if job["norm"]["kind"] not in _NORM_KINDS[m]:
            raise UsageError(f"config invalid at jobs/{i}/norm/kind: {m} needs one of {_NORM_KINDS[m]}")
        if m == "coupling" and job["coupling"] == "example2" and job["norm"]["kind"] != "sup":
            raise UsageError(f"config invalid at jobs/{i}/norm/kind: the example2 coupling bounds the sup norm")


# ----------------------------------------------------------------------------
# jobs


def _calibration(job):
    from .matrix_bounds import CalibrationConstant, default_calibration

    cal = job["calibration"]
    if cal == "default":
        return default_calibration()
    return CalibrationConstant.from_dict(cal)


def _default_sampler(norm: NormSpec, seed: int) -> SamplerSpec:
    return SamplerSpec.gaussian_vector(CovarianceSpec.identity(norm.dim), seed)


def _certificate(job, norm: NormSpec, sampler: SamplerSpec, t: float, seed: int):
    from . import coupling as cp
    from . import matrix_bounds as mb
    from . import pushforward as pf
    from . import vector_bounds as vb

    m = job["method"]
    budgets = job.get("budgets", {})
    prof = MomentProfile.from_dict(job["profile"]) if "profile" in job else None
    cov = CovarianceSpec.from_dict(job["cov"]) if "cov" in job else None
    if m == "theorem2":
        return vb.theorem2_bound(prof, cov, t)
    if m in ("corollary_subgauss", "corollary_subexp"):
        return vb.closed_form_euclidean(m.replace("corollary_subgauss", "sub_gaussian")
                                        .replace("corollary_subexp", "sub_exponential"), prof.eta, cov, t)
    if m == "polyhedral":
        return vb.polyhedral_bound(norm, t, seed=seed, **budgets)
    if m == "linf_gaussian":
        return vb.linf_gaussian_bound(norm.dim, t)
    if m == "pushforward":
        if prof.kind == "sub_gaussian":
            eta1, eta2 = prof.eta, 0.0
        elif prof.kind == "sub_gamma":
            eta1, eta2 = prof.eta, prof.eta2
        else:
            raise ConfigurationError("pushforward needs a sub_gaussian or sub_gamma profile")
        return pf.theorem3_bound(cov, norm, eta1, eta2, t, budgets or None, seed)
    if m in ("psd_sum", "sample_cov"):
        if sampler.family != "empirical_cov":
            raise ConfigurationError(f"{m} verifies against an empirical_cov sampler")
        eta = job.get("eta")
        if eta is None and m == "sample_cov":
            eta = sampler.declared_profile.eta
        elif eta is None:
            if sampler.core != "gaussian":
                raise ConfigurationError("psd_sum needs an explicit eta for non-Gaussian cores")
            eta = 2.0  # rank-one Gaussian summands: ((2p-1)!!)^{1/p} <= 2p
        fn = mb.psd_sum_bound if m == "psd_sum" else mb.sample_cov_bound
        return fn(eta, sampler.cov, sampler.n, t, _calibration(job))
    if m == "matrix_series":
        stats = mb.series_stats(sampler.A_list, seed=seed, **budgets)
        return mb.series_bound(stats, sampler.declared_profile, t, _calibration(job))
    if m == "coupling":
        F = norm.norm_rows
        name = job["coupling"]
        if name == "identity":
            c = cp.identity_coupling(sampler, F)
        elif name == "shifted-gaussian":
            c = cp.shifted_gaussian_coupling(sampler, F)
        else:
            c = cp.example2_coupling(sampler)
        nu = cp.nu_F_estimate(c, budgets.get("n_x", 100), budgets.get("n_y_per_x", 1000), seed).value
        if not math.isfinite(nu):
            raise TailcertError("ν_F estimate is unbounded")
        return cp.coupling_tail_bound(c, t, nu, n_mc=budgets.get("n_mc", 100_000), seed=seed)
    raise ConfigurationError(f"unknown method {m!r}")


def run_job(job: dict, seed_override=None) -> list:
    """Rows for every t of one job; numeric failures become error rows."""
    seed = int(job["seed"])
    if seed_override is not None:
        seed = mix_seed(seed, int(seed_override))
    norm = NormSpec.from_dict(job["norm"])
    sampler = SamplerSpec.from_dict(job["sampler"]) if "sampler" in job else _default_sampler(norm, seed)
    conf = float(job.get("conf", 0.99))
    out = []
    for t in job["t_grid"]:
        t = float(t)
        try:
            cert = _certificate(job, norm, sampler, t, seed)
            if job.get("halve_bound"):
                cert = replace(cert, bound_value=0.5 * cert.bound_value,
                               flags=tuple(cert.flags) + ("halved_test_hook",))
            rep = certify(cert, sampler, norm, int(job["n_mc"]), conf, seed)
            out.append(rep.to_dict())
        except (TailcertError, ArithmeticError, np.linalg.LinAlgError) as exc:
            log.warning("job %s at t=%s failed: %s", job["method"], t, exc)
            out.append({"method": job["method"], "d": norm.shape[0], "n": int(sampler.n or 0), "t": t,
                        "bound": math.nan, "q_emp": math.nan, "ci_lo": math.nan, "ci_hi": math.nan,
                        "verdict": "error", "seed": seed, "error": f"{type(exc).__name__}: {exc}"})
    return out


def run_config(config: dict, workers: int = 1, seed_override=None) -> list:
    """Validate and run every job; rows come back in input order."""
    validate_config(config)
    jobs = config["jobs"]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(run_job, jobs, [seed_override] * len(jobs)))
    else:
        parts = [run_job(j, seed_override) for j in jobs]
    return [row for part in parts for row in part]


# ----------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.9g}"
    if isinstance(v, str) and v in ("inf", "-inf"):
        return v
    return str(v)


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    return v


def emit_report(rows, path=None, fmt: str = "csv") -> str:
    """Write rows as CSV or JSON to ``path`` (stdout when None); returns the text."""
    if fmt == "csv":
        text = format_csv(rows)
    elif fmt == "json":
        text = json.dumps(_json_safe(list(rows)), indent=2, sort_keys=True) + "\n"
    else:
        raise DomainError(f"unknown format {fmt!r}")
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def exit_status(rows) -> int:
    verdicts = [r["verdict"] for r in rows]
    if "violated" in verdicts:
        return EXIT_VIOLATED
    if "error" in verdicts:
        return EXIT_NUMERIC
    return EXIT_OK


# ----------------------------------------------------------------------------


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tailcert", description="Compute and Monte Carlo check tail bounds.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="JSON experiment config")
    run.add_argument("--out", help="output path (default: config output.path or stdout)")
    run.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--seed-override", type=_u64, help="mix this value into every job seed")
    run.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("tailcert: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        rows = run_config(config, args.jobs, args.seed_override)
    except (OSError, json.JSONDecodeError, UsageError) as exc:
        print(f"tailcert: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TailcertError as exc:
        print(f"tailcert: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    output = config.get("output", {})
    path = args.out or output.get("path")
    fmt = args.format or output.get("format", "csv")
    emit_report(rows, path, fmt)
    return exit_status(rows)


if __name__ == "__main__":
    sys.exit(main())
