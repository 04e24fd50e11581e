"""Command-line surface: generate, verify, analyze, sweep, compose.

Every command prints one machine-readable run report (JSON) to standard
output and a short human summary to standard error.  The verify and sweep
commands additionally write delimited files on request, with a rendered
figure next to each unless --no-plot is given.

Exit codes: 0 success/pass, 1 verification failure, 2 configuration error,
3 domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze_snapshot, sweep
from .chain import DEFAULT_SEED, ChainFamily, CkReport, TriplePlan, verify_ck
from .config import LoadedConfig, list_presets, load_chain
from .errors import ConfigError, DomainError, EvochainError


# --- argument parsing helpers -------------------------------------------------

def _range_arg(text: str) -> tuple[float, float]:
    parts = text.split(":")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 <= lo < hi):
        raise argparse.ArgumentTypeError(f"need 0 <= a < b, got {text!r}")
    return lo, hi


def _grid_arg(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        ns, nt = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NsxNt, got {text!r}") from None
    if ns < 2 or nt < 2:
        raise argparse.ArgumentTypeError("grid needs at least 2 points per axis")
    return ns, nt


def _pair_arg(text: str) -> tuple[float, float]:
    parts = text.split(",")
    try:
        s, t = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected s,t, got {text!r}") from None
    return s, t


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evochain",
        description="Build and check two-parameter families of evolution algebras.",
        epilog=f"bundled presets: {', '.join(list_presets()) or 'none'}",
    )
    parser.add_argument("--version", action="version", version=f"evochain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="print a chain summary from a config")
    p.add_argument("config", help="config file path or bundled preset name")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="check the composition law on sampled triples")
    p.add_argument("config")
    p.add_argument("--triples", type=int, default=1000, help="random triples to draw")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--tol", type=float, default=1e-9, help="relative residual tolerance")
    p.add_argument("--window", type=_range_arg, metavar="a:b", help="sampling window")
    p.add_argument("--out-csv", metavar="FILE", help="write per-triple residuals as CSV")
    p.add_argument("--no-plot", action="store_true", help="skip the figure next to the CSV")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="full algebra snapshot at one time pair")
    p.add_argument("config")
    p.add_argument("--at", type=_pair_arg, metavar="s,t", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="grid analysis localizing property changes")
    p.add_argument("config")
    p.add_argument("--grid", type=_grid_arg, default=(50, 50), metavar="NsxNt")
    p.add_argument("--s", type=_range_arg, metavar="a:b", help="s range (default: domain window)")
    p.add_argument("--t", type=_range_arg, metavar="a:b", help="t range (default: domain window)")
    p.add_argument("--out", metavar="FILE", help="write the per-cell CSV here")
    p.add_argument("--tol", type=float, default=1e-8, help="classification tolerance")
    p.add_argument("--no-plot", action="store_true", help="skip the figure next to the CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compose", help="emit a direct-sum config from block configs")
    p.add_argument("configs", nargs="+", help="block config paths or preset names")
    p.add_argument("--out", metavar="FILE", help="write the composed config here")
    p.set_defaults(func=cmd_compose)

    return parser


# --- emission ----------------------------------------------------------------

def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _emit(command: str, loaded: LoadedConfig | None, result: dict, started: float, seed=None):
    report = {
        "tool": "evochain",
        "version": __version__,
        "command": command,
        "config": loaded.source if loaded else None,
        "config_sha256": loaded.sha256 if loaded else None,
        "seed": seed,
        "elapsed_s": round(time.perf_counter() - started, 6),
        "result": result,
    }
    json.dump(report, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")


def _say(*lines: str):
    for line in lines:
        print(line, file=sys.stderr)


def _window_json(chain: ChainFamily):
    lo, hi = chain.window
    return [lo, hi if math.isfinite(hi) else None]


# --- commands ----------------------------------------------------------------

def cmd_generate(args) -> int:
    started = time.perf_counter()
    chain, loaded = load_chain(args.config)
    result = {
        "name": chain.name,
        "generator": loaded.data.get("generator"),
        "dimension": chain.n,
        "window": _window_json(chain),
        "entries": chain.formulas(),
        "thresholds": list(chain.thresholds),
        "notes": list(chain.notes),
    }
    _emit("generate", loaded, result, started)

    lo, hi = chain.window
    _say(
        f"{chain.name}: {chain.n}x{chain.n} family "
        f"({loaded.data.get('generator')}), window [{lo:g}, {'inf' if math.isinf(hi) else f'{hi:g}'}]"
    )
    nonzero = 0
    for i, row in enumerate(chain.formulas()):
        for j, formula in enumerate(row):
            if formula != "0":
                nonzero += 1
                _say(f"  a[{i + 1}][{j + 1}] = {formula}")
    if nonzero == 0:
        _say("  all entries are identically zero")
    for note in chain.notes:
        _say(f"  note: {note}")
    return 0


def _write_verify_csv(report: CkReport, path: Path):
    order = np.argsort(report.residuals, kind="stable")[::-1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s", "tau", "t", "residual", "defect", "scale"])
        for idx in order:
            s, tau, t = report.triples[idx]
            writer.writerow(
                [
                    repr(float(s)),
                    repr(float(tau)),
                    repr(float(t)),
                    repr(float(report.residuals[idx])),
                    repr(float(report.defects[idx])),
                    repr(float(report.scales[idx])),
                ]
            )


def cmd_verify(args) -> int:
    started = time.perf_counter()
    chain, loaded = load_chain(args.config)
    plan = TriplePlan(count=args.triples, window=args.window, seed=args.seed)
    report = verify_ck(chain, plan=plan, tol=args.tol)

    result = report.to_dict()
    if args.out_csv:
        out = Path(args.out_csv)
        _write_verify_csv(report, out)
        result["csv"] = str(out)
        if not args.no_plot:
            from .plots import render_verify_figure

            fig_path = out.with_suffix(".png")
            render_verify_figure(report, chain, fig_path)
            result["figure"] = str(fig_path)
    _emit("verify", loaded, result, started, seed=args.seed)

    verdict = "PASS" if report.passed else "FAIL"
    _say(
        f"{chain.name}: {verdict}, max residual {report.max_residual:.3e} "
        f"(tol {report.tol:g}) over {report.n_triples} triples"
    )
    if report.worst_triple:
        s, tau, t = report.worst_triple
        _say(f"  worst triple: s={s:.6g}, tau={tau:.6g}, t={t:.6g}")
    if report.domain_failures:
        _say(f"  domain failures: {len(report.domain_failures)}")
    for regime in report.regime_stats:
        flag = "" if regime.max_residual <= report.tol else "  <-- exceeds tolerance"
        _say(f"  {regime.label}: n={regime.count}, max {regime.max_residual:.3e}{flag}")
    return 0 if report.passed else 1


def cmd_analyze(args) -> int:
    started = time.perf_counter()
    chain, loaded = load_chain(args.config)
    s, t = args.at
    alg = chain.evaluate(s, t)
    report = analyze_snapshot(alg)

    result = report.to_dict()
    result["at"] = [s, t]
    _emit("analyze", loaded, result, started)

    _say(f"{chain.name} at (s, t)=({s:g}, {t:g}):")
    for row in alg.matrix:
        _say("  [" + "  ".join(f"{v: .6g}" for v in row) + "]")
    _say(f"  nilpotent: {report.nilpotency.nilpotent}")
    _say(f"  baric: {report.baric} ({len(report.characters)} character(s))")
    _say(f"  absolute nilpotents: {report.absolute.kind}")
    if report.idempotent_points is not None:
        _say(f"  idempotents: {len(report.idempotent_points)}")
        if report.classification is not None:
            for p in report.classification.points:
                coords = ", ".join(f"{v:.6g}" for v in p.point)
                _say(f"    ({coords})  [{p.condition}; root: {p.root}]")
    if report.note:
        _say(f"  note: {report.note}")
    return 0


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    chain, loaded = load_chain(args.config)

    default_range = None
    if math.isfinite(chain.window[1]):
        default_range = chain.window
    s_range = args.s or default_range
    t_range = args.t or default_range
    if s_range is None or t_range is None:
        raise ConfigError(
            "chain has an unbounded domain window; pass --s a:b and --t a:b"
        )

    report = sweep(chain, s_range, t_range, grid=args.grid, tol=args.tol)

    result = report.to_dict()
    if args.out:
        out = Path(args.out)
        report.write_csv(out)
        result["csv"] = str(out)
        if not args.no_plot:
            from .plots import render_sweep_figure

            fig_path = out.with_suffix(".png")
            render_sweep_figure(report, fig_path)
            result["figure"] = str(fig_path)
    _emit("sweep", loaded, result, started)

    ns, nt = args.grid
    _say(f"{chain.name}: swept {ns}x{nt} grid, statuses {dict(report.status_counts)}")
    _say(f"  baric transitions: {len(report.crossings.get('baric', []))}")
    for key in ("disc1", "disc2", "disc3", "disc4", "disc5", "idempotent_count"):
        edges = report.crossings.get(key, [])
        if edges:
            _say(f"  {key} crossings: {len(edges)} edge(s)")
    return 0


def cmd_compose(args) -> int:
    started = time.perf_counter()
    blocks = []
    total_dim = 0
    names = []
    for ref in args.configs:
        chain, loaded = load_chain(ref)
        total_dim += chain.n
        names.append(chain.name)
        if loaded.base_dir is None:
            blocks.append(str(ref))  # bundled preset, keep the bare name
        else:
            blocks.append(str(Path(loaded.source).resolve()))

    out_path = Path(args.out) if args.out else None
    if out_path is not None:
        base = out_path.resolve().parent
        rel_blocks = []
        for b in blocks:
            p = Path(b)
            if p.is_absolute():
                try:
                    rel_blocks.append(str(p.relative_to(base)))
                except ValueError:
                    rel_blocks.append(str(p))
            else:
                rel_blocks.append(b)
        blocks = rel_blocks

    doc = {
        "generator": "direct-sum",
        "name": "+".join(names),
        "blocks": blocks,
    }
    if out_path is not None:
        out_path.write_text(json.dumps(doc, indent=2) + "\n")
        # round-trip the file so unresolvable references fail here, not later
        composed, _ = load_chain(out_path)
    else:
        from .config import build_chain

        composed = build_chain(doc, base_dir=Path.cwd())

    result = {"config": doc, "dimension": composed.n}
    if out_path is not None:
        result["path"] = str(out_path)
    _emit("compose", None, result, started)

    where = f" -> {out_path}" if out_path is not None else ""
    _say(f"direct sum of {len(blocks)} block(s), dimension {composed.n}{where}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except EvochainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
