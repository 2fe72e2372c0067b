"""Command line front end: ``tfim-magic <command> [options]``.

Commands
--------
correlators   thermodynamic G_r tables
kernel        dump one correlation kernel as CSV
magic         M₂ sweeps over λ and N (or block length L)
oracle-check  free-fermion vs exact-diagonalization table
figures       fig1a.csv, fig1b.csv, fig1c.csv and a JSON sidecar
fit           linear / inverse fits of an entropy CSV

Exit codes: 0 ok, 2 usage, 3 capacity, 4 numerical, 5 failed check.
"""

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import _accel
from .analysis import FIT_L, FIT_N, FIGURE_LAMBDAS, block_error, figure_data, fit_inverse, fit_linear
from .entropy import (
    DEFAULT_CAP,
    DEFAULT_ZERO_TOL,
    PURE_CHAIN,
    REDUCED_BLOCK,
    density_sweep,
    results_from_csv,
    results_to_csv,
    results_to_json,
)
from .errors import CapacityError, MagicError
from .freefermion import (
    FINITE_CHAIN,
    THERMODYNAMIC,
    QuadratureConfig,
    build_kernel,
    thermodynamic_correlator,
    validate_lambda,
    write_kernel_csv,
)
from .oracle import PURE_PAULI_CAP, cross_check
from .wick import enumerate_balanced_monomials, monomial_count, wick_determinant

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_NUMERICAL = 4
EXIT_CHECK = 5

_BACKEND_ALIASES = {
    "auto": "auto",
    "finite": FINITE_CHAIN,
    FINITE_CHAIN: FINITE_CHAIN,
    "tl": THERMODYNAMIC,
    THERMODYNAMIC: THERMODYNAMIC,
}

# fields that never change results and are left out of embedded configs
_NON_SEMANTIC = ("threads", "output")

DUMP_MINORS_CAP = 8


class UsageError(MagicError):
    exit_code = EXIT_USAGE


@dataclass
class RunConfig:
    """Validated, fully resolved settings of one invocation."""

    command: str
    lambdas: list = field(default_factory=list)
    sizes: list = field(default_factory=list)
    backend: str = "auto"
    boundary: str = "periodic"
    quad_tol: float = 1e-12
    threads: int = 1
    output: str = None
    fmt: str = "csv"
    seed: int = 0
    mode: str = "pure"
    cap: int = DEFAULT_CAP
    force: bool = False
    keep_going: bool = False
    zero_tol: float = DEFAULT_ZERO_TOL
    offsets: list = field(default_factory=list)
    block_sizes: list = field(default_factory=list)
    tol: float = 1e-8
    alpha: float = None
    input: str = None
    check: bool = False
    timings: bool = False
    dump_minors: str = None

    @classmethod
    def from_mapping(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown config field(s): {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        try:
            self.lambdas = [validate_lambda(x) for x in self.lambdas]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if self.backend not in _BACKEND_ALIASES:
            raise UsageError(f"unknown backend {self.backend!r}")
        self.backend = _BACKEND_ALIASES[self.backend]
        if self.boundary not in ("periodic", "open"):
            raise UsageError(f"boundary must be periodic or open, got {self.boundary!r}")
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.fmt!r}")
        if self.mode not in ("pure", "reduced"):
            raise UsageError(f"mode must be pure or reduced, got {self.mode!r}")
        if not self.quad_tol > 0 or not self.zero_tol >= 0 or not self.tol > 0:
            raise UsageError("tolerances must be positive")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if any(n < 1 for n in self.sizes + self.block_sizes):
            raise UsageError("sizes must be >= 1")
        return self

    @property
    def quadrature(self):
        return QuadratureConfig(abs_tol=self.quad_tol)

    def resolved_backend(self, mode=None):
        """``auto`` means the pure finite ring for whole chains, the infinite chain for blocks."""
        if self.backend != "auto":
            return self.backend
        return FINITE_CHAIN if (mode or self.mode) == "pure" else THERMODYNAMIC

    def embedded(self):
        d = dataclasses.asdict(self)
        for k in _NON_SEMANTIC:
            d.pop(k)
        return d


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def parse_range(text):
    """``"a..b"`` (inclusive), ``"a,b,c"`` or a single integer."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split("..", 1))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; expected a..b or a,b,c") from None


def parse_lambdas(text):
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad λ list {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    common.add_argument("-o", "--output", default=None, help="output file (directory for figures)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--quad-tol", type=float, default=1e-12)

    backend = argparse.ArgumentParser(add_help=False)
    backend.add_argument("--backend", default="auto", choices=sorted(_BACKEND_ALIASES))
    backend.add_argument("--boundary", default="periodic", choices=("periodic", "open"))

    p = argparse.ArgumentParser(prog="tfim-magic", description="Stabilizer entropy of the Ising chain.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("correlators", parents=[common], help="thermodynamic G_r table")
    c.add_argument("--lambda", dest="lambdas", type=parse_lambdas, required=True)
    c.add_argument("--r", dest="offsets", type=parse_range, default=list(range(0, 11)))

    k = sub.add_parser("kernel", parents=[common, backend], help="write one kernel as CSV")
    k.add_argument("--lambda", dest="lambdas", type=parse_lambdas, required=True)
    k.add_argument("--n", dest="sizes", type=parse_range, required=True)

    m = sub.add_parser("magic", parents=[common, backend], help="M₂ sweep")
    m.add_argument("--lambda", dest="lambdas", type=parse_lambdas, default=list(FIGURE_LAMBDAS))
    m.add_argument("--n", dest="sizes", type=parse_range, default=list(FIT_N))
    m.add_argument("--mode", choices=("pure", "reduced"), default="pure")
    m.add_argument("--cap", type=int, default=DEFAULT_CAP)
    m.add_argument("--force", action="store_true", help="lift the size cap to the largest N")
    m.add_argument("--keep-going", action="store_true")
    m.add_argument("--zero-tol", type=float, default=DEFAULT_ZERO_TOL)
    m.add_argument("--timings", action="store_true", help="include runtime_ms (not reproducible)")
    m.add_argument(
        "--dump-minors",
        metavar="PATH",
        default=None,
        help=f"debug: write every (monomial, determinant) pair as CSV, N <= {DUMP_MINORS_CAP}",
    )

    o = sub.add_parser("oracle-check", parents=[common], help="free-fermion vs ED table")
    o.add_argument("--lambda", dest="lambdas", type=parse_lambdas, default=[0.5, 1.0, 1.5, 2.0, 5.0])
    o.add_argument("--n", dest="sizes", type=parse_range, default=list(range(2, 9)))
    o.add_argument("--boundary", default="periodic", choices=("periodic", "open"))
    o.add_argument("--tol", type=float, default=1e-8)

    f = sub.add_parser("figures", parents=[common, backend], help="figure data and fits")
    f.add_argument("--lambda", dest="lambdas", type=parse_lambdas, default=list(FIGURE_LAMBDAS))
    f.add_argument("--n", dest="sizes", type=parse_range, default=list(FIT_N))
    f.add_argument("--L", dest="block_sizes", type=parse_range, default=list(FIT_L))
    f.add_argument("--check", action="store_true", help="exit 5 unless the reproduction gates pass")

    t = sub.add_parser("fit", parents=[common], help="fit an entropy CSV written by `magic`")
    t.add_argument("--input", "-i", required=True)
    t.add_argument("--alpha", type=float, default=None, help="reference α for block errors")
    return p


def config_from_args(ns):
    data = {k: v for k, v in vars(ns).items() if v is not None or k in ("output",)}
    return RunConfig.from_mapping(data)


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


def _header(cfg):
    return "config: " + json.dumps(cfg.embedded(), sort_keys=True)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_csv(rows, columns, header_comment=None):
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def table_json(rows, cfg):
    return json.dumps({"config": cfg.embedded(), "rows": rows}, indent=2, sort_keys=False) + "\n"


def emit(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit_table(cfg, rows, columns):
    if cfg.fmt == "json":
        emit(table_json(rows, cfg), cfg.output)
    else:
        emit(table_csv(rows, columns, _header(cfg)), cfg.output)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_correlators(cfg):
    if not cfg.offsets:
        raise UsageError("--r needs at least one offset")
    rows = [
        {"lambda": lam, "r": r, "G_r": thermodynamic_correlator(lam, r, cfg.quadrature)}
        for lam in cfg.lambdas
        for r in cfg.offsets
    ]
    _emit_table(cfg, rows, ["lambda", "r", "G_r"])
    return EXIT_OK


def cmd_kernel(cfg):
    if len(cfg.lambdas) != 1 or len(cfg.sizes) != 1:
        raise UsageError("kernel takes exactly one λ and one N")
    backend = cfg.resolved_backend("pure")
    kern = build_kernel(cfg.lambdas[0], cfg.sizes[0], backend, cfg.boundary, cfg.quadrature)
    if cfg.output is None:
        write_kernel_csv(kern, sys.stdout)
    else:
        write_kernel_csv(kern, cfg.output)
    return EXIT_OK


def _capacity_guard(cfg):
    top = max(cfg.sizes)
    if top > cfg.cap and not cfg.force:
        raise CapacityError(
            f"N={top} exceeds cap {cfg.cap}: about {monomial_count(top):,} determinants "
            f"for that size alone; pass --force (or raise --cap) to run it anyway"
        )
    return max(cfg.cap, top) if cfg.force else cfg.cap


def _dump_minors(cfg, path):
    backend = cfg.resolved_backend()
    if max(cfg.sizes) > DUMP_MINORS_CAP:
        raise CapacityError(f"--dump-minors is limited to N <= {DUMP_MINORS_CAP}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "N", "a_sites", "b_sites", "determinant"])
        for lam in cfg.lambdas:
            for n in cfg.sizes:
                kern = build_kernel(lam, n, backend, cfg.boundary, cfg.quadrature)
                for mono in enumerate_balanced_monomials(n):
                    w.writerow(
                        [repr(lam), n, " ".join(map(str, mono.a_sites)),
                         " ".join(map(str, mono.b_sites)), repr(wick_determinant(kern, mono))]
                    )  # fmt: skip


def cmd_magic(cfg):
    if not cfg.lambdas or not cfg.sizes:
        raise UsageError("need at least one λ and one size")
    cap = _capacity_guard(cfg)
    _accel.set_threads(cfg.threads)
    backend = cfg.resolved_backend()
    if cfg.dump_minors:
        _dump_minors(cfg, cfg.dump_minors)
    sweep = density_sweep(
        cfg.lambdas,
        cfg.sizes,
        mode=cfg.mode,
        backend=backend,
        boundary=cfg.boundary,
        q=cfg.quadrature,
        cap=cap,
        zero_tol=cfg.zero_tol,
        threads=cfg.threads,
    )
    results = [r if cfg.mode == "pure" else r.result for r in sweep.rows]
    if cfg.fmt == "json":
        emit(results_to_json(results, cfg.timings, cfg.embedded()), cfg.output)
    else:
        emit(results_to_csv(results, cfg.timings, _header(cfg)), cfg.output)
    for f in sweep.failures:
        print(f"failed: λ={f['lambda']} size={f['size']}: {f['error']}", file=sys.stderr)
    if sweep.failures and not cfg.keep_going:
        if all(f["error"].startswith("CapacityError") for f in sweep.failures):
            return EXIT_CAPACITY
        return EXIT_NUMERICAL
    return EXIT_OK


ORACLE_COLUMNS = ["check", "N", "lambda", "free_fermion", "oracle", "abs_diff", "tol", "pass"]


def cmd_oracle_check(cfg):
    if not cfg.lambdas or not cfg.sizes:
        raise UsageError("need at least one λ and one N")
    top = max(cfg.sizes)
    if top > PURE_PAULI_CAP:
        raise CapacityError(f"oracle check needs 4^N Pauli strings; N={top} exceeds cap {PURE_PAULI_CAP}")
    if min(cfg.sizes) < 2:
        raise UsageError("oracle check needs N >= 2")
    rows = []
    for n in cfg.sizes:
        for lam in cfg.lambdas:
            rows.extend(cross_check(n, lam, cfg.tol, cfg.boundary))
    _emit_table(cfg, rows, ORACLE_COLUMNS)
    failed = [r for r in rows if not r["pass"]]
    for r in failed:
        print(f"FAIL {r['check']} N={r['N']} λ={r['lambda']}: diff {r['abs_diff']:.3e}", file=sys.stderr)
    return EXIT_CHECK if failed else EXIT_OK


FIG1A_COLUMNS = ["lambda", "N", "m2", "m0", "kind", "fit_m2"]
FIG1B_COLUMNS = ["lambda", "inv_lambda", "alpha", "alpha_err", "alpha_1", "abs_gap", "rel_gap"]
FIG1C_COLUMNS = ["L", "alpha_L", "epsilon_rel", "epsilon_abs", "fit_rel", "fit_abs"]


def figure_gates(fig1a, fig1b, summary):
    """Pass/fail of the reproduction targets on one figure run."""
    by_lam = {r["lambda"]: r for r in fig1b}
    fits = summary["linear_fits"]
    gates = {
        "fig1a_rms": all(f["residual_rms"] < 0.05 for f in fits.values()),
        "fig1a_alpha_critical": abs(summary["alpha_critical"] - 0.44) <= 0.02,
        "fig1a_alpha_max_at_1": max(by_lam, key=lambda x: by_lam[x]["alpha"]) == 1.0 if 1.0 in by_lam else None,
        "fig1b_rel_gap": all(
            by_lam[x]["rel_gap"] is not None and by_lam[x]["rel_gap"] < 1e-3
            for x in (2.0, 2.5, 5.0)
            if x in by_lam
        ),
    }
    g = summary["gamma_relative"]
    gates["fig1c_gamma"] = 0.19 <= g["params"][0] <= 0.22 and g["max_rel_residual"] < 0.1
    return gates


def cmd_figures(cfg):
    if not cfg.lambdas or len(cfg.sizes) < 3 or len(cfg.block_sizes) < 3:
        raise UsageError("figures need a λ grid and at least 3 values in each fit range")
    top = max(max(cfg.sizes), max(cfg.block_sizes))
    if top > cfg.cap:
        raise CapacityError(f"size {top} exceeds cap {cfg.cap} ({monomial_count(top):,} determinants)")
    _accel.set_threads(cfg.threads)
    outdir = Path(cfg.output or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    fig1a, fig1b, fig1c, summary = figure_data(
        lambdas=cfg.lambdas,
        n_range=cfg.sizes,
        L_range=cfg.block_sizes,
        fit_backend=cfg.resolved_backend("pure"),
        block_backend=THERMODYNAMIC,
        q=cfg.quadrature,
        threads=cfg.threads,
    )
    header = _header(cfg)
    emit(table_csv(fig1a, FIG1A_COLUMNS, header), outdir / "fig1a.csv")
    emit(table_csv(fig1b, FIG1B_COLUMNS, header), outdir / "fig1b.csv")
    emit(table_csv(fig1c, FIG1C_COLUMNS, header), outdir / "fig1c.csv")
    gates = figure_gates(fig1a, fig1b, summary)
    sidecar = {"config": cfg.embedded(), "accel": _accel.backend_name(), **summary, "gates": gates}
    emit(json.dumps(sidecar, indent=2) + "\n", outdir / "figures.json")
    if cfg.check and not all(v is not False for v in gates.values()):
        for name, ok in gates.items():
            print(f"{name}: {'pass' if ok else 'FAIL'}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_fit(cfg):
    with open(cfg.input, encoding="utf-8") as fh:
        results = results_from_csv(fh.read())
    if not results:
        raise UsageError(f"{cfg.input}: no entropy rows")
    out = {"config": cfg.embedded(), "linear": {}, "inverse": {}}
    lams = sorted({r.lam for r in results})
    for lam in lams:
        pure = sorted((r.sites, r.m2) for r in results if r.lam == lam and r.kind == PURE_CHAIN)
        if len(pure) >= 3:
            out["linear"][repr(lam)] = fit_linear(pure).as_dict()
        blocks = sorted((r.sites, r.m2 / r.sites) for r in results if r.lam == lam and r.kind == REDUCED_BLOCK)
        if blocks and cfg.alpha is not None:
            pts = [(L, block_error(cfg.alpha, a)) for L, a in blocks]
            out["inverse"][repr(lam)] = dict(fit_inverse(pts).as_dict(), alpha=cfg.alpha)
    if not out["linear"] and not out["inverse"]:
        raise UsageError("nothing to fit: need >= 3 pure-chain sizes per λ, or block rows with --alpha")
    emit(json.dumps(out, indent=2) + "\n", cfg.output)
    return EXIT_OK


COMMANDS = {
    "correlators": cmd_correlators,
    "kernel": cmd_kernel,
    "magic": cmd_magic,
    "oracle-check": cmd_oracle_check,
    "figures": cmd_figures,
    "fit": cmd_fit,
}


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tfim-magic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MagicError as exc:
        print(f"tfim-magic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"tfim-magic: error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) else 1


if __name__ == "__main__":
    sys.exit(main())
