"""Command-line front end.

Exit codes: 0 success (or a diagnostic-only verdict), 1 runtime error,
2 configuration error or violated hypothesis, 3 statistical failure.
The default worker count comes from ``MINWALK_THREADS``.
"""
from __future__ import annotations

import sys
from pathlib import Path
from typing import Callable, List, Optional

import click

from . import __version__
from . import io as mio
from . import verify as ver
from .errors import HypothesisViolation, MinWalkError
from .model import ModelParams, enumerate_distribution
from .simulate import THREADS_ENV, run_ensemble

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_STAT = 0, 1, 2, 3

THEOREMS = ("slln", "clt", "limit", "regime", "lil-diag")

PRESETS = {
    "diagonal": [(0.2, 0.2, 0.5), (0.5, 0.5, 0.5), (0.8, 0.8, 0.5)],
    "q0-row": [(0.6, 0.0, 1.0), (0.7, 0.0, 1.0), (0.8, 0.0, 1.0), (0.9, 0.0, 1.0)],
}


class StatisticalFailure(Exception):
    pass


def _common(fn: Callable) -> Callable:
    opts = [
        click.option("--p", type=float, help="Probability to copy a right step. Default 0.5."),
        click.option("--q", type=float, help="Probability to turn a stay into a right step. Default 0.5."),
        click.option("--s", type=float, help="Probability of a right first step. Default 0.5."),
        click.option("--n", type=int, help="Number of steps."),
        click.option("--replicas", type=int, help="Number of independent paths."),
        click.option("--seed", type=int, help="Master seed. Default 20240601."),
        click.option("--checkpoints", type=str, help="'pow2' or a comma-separated list of step counts."),
        click.option("--engine", type=click.Choice(["reduced", "naive"]), help="Simulation engine."),
        click.option("--threads", type=int, help=f"Worker threads (default: ${THREADS_ENV} or CPU count)."),
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file."),
        click.option("--out", type=click.Path(file_okay=False), help="Output directory. Default '.'."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _resolve(kw: dict, base: Optional[mio.RunConfig] = None) -> mio.RunConfig:
    file_values = mio.load_config_file(kw["config_path"]) if kw.get("config_path") else None
    flags = {k: kw.get(k) for k in ("p", "q", "s", "n", "replicas", "seed", "engine", "out")}
    if kw.get("checkpoints") is not None:
        flags["checkpoints"] = mio.parse_checkpoints(kw["checkpoints"])
    return mio.merge_config(file_values, flags, base)


def _params(cfg: mio.RunConfig) -> ModelParams:
    return ModelParams(cfg.p, cfg.q, cfg.s)


def _outdir(cfg: mio.RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


@click.group()
@click.version_option(__version__, prog_name="minwalk")
def cli() -> None:
    """Simulate and verify the minimal random walk with memory."""


@cli.command()
@_common
def simulate(**kw) -> None:
    """Run an ensemble and write stats.csv and manifest.json."""
    cfg = _resolve(kw)
    params = _params(cfg)
    run = run_ensemble(params, cfg.n, cfg.replicas, cfg.seed, cfg.checkpoint_list(), cfg.engine, kw["threads"])
    manifest = mio.build_manifest("simulate", cfg)
    digest = manifest["manifestHash"]
    out = _outdir(cfg)
    (out / "stats.csv").write_text(mio.csv_text(mio.STATS_HEADER, mio.stats_rows(run.stats), digest))
    if cfg.replicas == 1:
        rows = zip(run.checkpoints, run.positions[0].tolist())
        (out / "path.csv").write_text(mio.csv_text(("checkpoint", "x"), rows, digest))
    mio.write_json(out / "manifest.json", manifest)
    click.echo(f"wrote {out / 'stats.csv'} ({len(run.checkpoints)} checkpoints, {cfg.replicas} replicas)")


@cli.command("enumerate")
@_common
@click.option("--cap", type=int, default=None, help="Largest n the enumeration accepts.")
def enumerate_cmd(cap: Optional[int], **kw) -> None:
    """Write the exact pmf of X_n to pmf.csv."""
    cfg = _resolve(kw)
    extra = {} if cap is None else {"cap": cap}
    dist = enumerate_distribution(_params(cfg), cfg.n, **extra)
    manifest = mio.build_manifest("enumerate", cfg, {"cap": cap})
    out = _outdir(cfg)
    rows = ((x, float(dist.mass[x])) for x in range(dist.mass.size))
    (out / "pmf.csv").write_text(mio.csv_text(("x", "probability"), rows, manifest["manifestHash"]))
    mio.write_json(out / "manifest.json", manifest)
    click.echo(f"wrote {out / 'pmf.csv'} (support 0..{dist.mass.size - 1})")


def _verify_config(kind: str, cfg: mio.RunConfig, threads: Optional[int]) -> ver.VerifyConfig:
    cps = cfg.checkpoint_list()
    return ver.VerifyConfig(
        n=cfg.n,
        replicas=cfg.replicas,
        seed=cfg.seed,
        checkpoints=tuple(cps) if cps else None,
        engine=cfg.engine,
        workers=threads,
        thresholds=cfg.threshold_object(),
    )


def _run_theorem(kind: str, params: ModelParams, vcfg: ver.VerifyConfig) -> ver.VerificationReport:
    if kind == "slln":
        return ver.verify_slln(params, vcfg)
    if kind == "clt":
        return ver.verify_clt(params, vcfg)
    if kind == "limit":
        if params.q != 0:
            raise HypothesisViolation(f"q = 0 required (q = {params.q:g})")
        return ver.verify_limit_q0(params.s, params.p, vcfg)
    if kind == "regime":
        return ver.verify_regime(params, vcfg)
    return ver.lil_diagnostic(params, vcfg)


def _base_for(kind: str) -> mio.RunConfig:
    d = ver.DEFAULT_CONFIGS[kind]
    return mio.RunConfig(n=d.n, replicas=d.replicas, seed=d.seed)


@cli.command()
@click.argument("theorem", type=click.Choice(THEOREMS + ("all",)))
@_common
def verify(theorem: str, **kw) -> None:
    """Check a limit theorem and write report.json and summary.txt.

    With THEOREM 'all', theorems whose hypotheses fail are skipped and
    listed in the report; each runs at its own default scale unless --n or
    --replicas is given.
    """
    kinds = THEOREMS if theorem == "all" else (theorem,)
    reports, skipped, last_cfg = [], [], None
    for kind in kinds:
        cfg = _resolve(kw, _base_for(kind))
        last_cfg = cfg
        try:
            reports.append(_run_theorem(kind, _params(cfg), _verify_config(kind, cfg, kw["threads"])))
        except (HypothesisViolation, MinWalkError) as exc:
            if theorem != "all":
                raise
            skipped.append({"theorem": kind, "reason": str(exc)})

    manifest = mio.build_manifest(f"verify {theorem}", last_cfg, {"theorems": list(kinds)})
    payload = {
        "schemaVersion": mio.SCHEMA_VERSION,
        "manifestHash": manifest["manifestHash"],
        "reports": [r.to_dict() for r in reports],
        "skipped": skipped,
    }
    out = _outdir(last_cfg)
    mio.write_json(out / "report.json", payload)
    mio.write_json(out / "manifest.json", manifest)
    text = "\n\n".join(r.summary() for r in reports)
    text += "".join(f"\nskipped {s['theorem']}: {s['reason']}" for s in skipped)
    (out / "summary.txt").write_text(f"# manifest_sha256={manifest['manifestHash']}\n{text}\n")
    click.echo(text)
    if any(r.verdict == "fail" for r in reports):
        raise StatisticalFailure(", ".join(r.theorem.value for r in reports if r.verdict == "fail"))


def _parse_point(text: str) -> tuple:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise mio.ConfigError(f"grid point {text!r} is not numeric") from None
    if len(parts) == 2:
        parts.append(0.5)
    if len(parts) != 3:
        raise mio.ConfigError(f"grid point {text!r} must be 'p,q' or 'p,q,s'")
    return tuple(parts)


@cli.command("phase-diagram")
@click.option("--point", "points", multiple=True, help="Grid point 'p,q[,s]'; repeatable.")
@click.option("--preset", "presets", multiple=True, type=click.Choice(sorted(PRESETS)), help="Named grid; repeatable.")
@click.option("--first-checkpoint", type=int, default=1 << 10, show_default=True)
@_common
def phase_diagram(points, presets, first_checkpoint: int, **kw) -> None:
    """Predicted vs measured variance-growth exponents, written to phase.csv."""
    grid: List[tuple] = [pt for name in presets for pt in PRESETS[name]]
    grid += [_parse_point(t) for t in points]
    if not grid:
        raise mio.ConfigError("grid is empty: give --point or --preset")
    cfg = _resolve(kw, _base_for("regime"))
    params = [ModelParams(*pt) for pt in grid]
    vcfg = _verify_config("regime", cfg, kw["threads"])
    rows = ver.phase_diagram(params, vcfg, first_checkpoint=first_checkpoint)
    manifest = mio.build_manifest("phase-diagram", cfg, {"grid": [list(pt) for pt in grid], "firstCheckpoint": first_checkpoint})
    header = ("p", "q", "s", "alpha", "regime", "predicted_exponent", "measured_exponent", "r2", "agrees")
    body = [tuple(r.as_dict()[h] for h in header) for r in rows]
    out = _outdir(cfg)
    (out / "phase.csv").write_text(mio.csv_text(header, body, manifest["manifestHash"]))
    mio.write_json(out / "manifest.json", manifest)
    for r in rows:
        d = r.as_dict()
        click.echo(
            f"p={d['p']:g} q={d['q']:g} {d['regime']:<14} predicted={d['predicted_exponent']} "
            f"measured={d['measured_exponent']:.4f} agrees={d['agrees']}"
        )
    if any(r.agrees is False for r in rows):
        raise StatisticalFailure("measured exponent outside tolerance")


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code instead of raising."""
    try:
        cli.main(args=argv, prog_name="minwalk", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_CONFIG
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_RUNTIME
    except StatisticalFailure as exc:
        click.echo(f"statistical failure: {exc}", err=True)
        return EXIT_STAT
    except MinWalkError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        click.echo(f"runtime error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_RUNTIME
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
