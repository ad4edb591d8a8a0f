"""Command-line entry point: ``aoisched {run,reproduce,bounds,sweep,show-config}``."""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import bound_report, tradeoff_eta
from .config import PRESETS, ConfigError, ExperimentConfig, load, preset
from .engine import ExperimentResult, run_experiment
from .env import GENERATOR_NAME
from .network import ConfigurationError
from .policies import PolicySpec

log = logging.getLogger("aoisched")


def _fmt(x) -> str:
    return format(float(x), ".12g")


def write_table(path: Path, result: ExperimentResult, digest: str) -> None:
    """CSV with a '#' metadata block; contains nothing run-dependent beyond the inputs."""
    md = result.metadata
    reg, reg_se = result.regret
    age, age_se = result.avg_age
    tot, tot_se = result.total_age
    ratio, _ = result.delivery_ratio
    n_links = ratio.shape[1]
    lines = [
        f"# aoisched {md['version']}",
        f"# config_digest: {digest}",
        f"# policy: {md['policy']}",
        f"# eta: {'' if md['eta'] is None else _fmt(md['eta'])}",
        f"# master_seed: {md['master_seed']}",
        f"# replications: {md['replications']}",
        f"# horizon: {md['horizon']}",
        f"# stride: {md['stride']}",
        f"# reward_model: {md['reward_model']}",
        f"# tie_break: {md['tie_break']}",
        f"# delivery_ratio: {md['delivery_ratio']}",
        f"# generator: {md['generator']}",
    ]
    header = ["slot", "regret_mean", "regret_stderr", "avg_age_mean", "avg_age_stderr",
              "total_age_mean", "total_age_stderr"] + [f"delivery_{n + 1}" for n in range(n_links)]
    lines.append(",".join(header))
    for i, t in enumerate(result.slots):
        row = [str(int(t)), _fmt(reg[i]), _fmt(reg_se[i]), _fmt(age[i]), _fmt(age_se[i]),
               _fmt(tot[i]), _fmt(tot_se[i])] + [_fmt(v) for v in ratio[i]]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def read_table(path) -> tuple[dict, np.ndarray, list[str]]:
    """Parse a table written by :func:`write_table` into (metadata, data, columns)."""
    meta, rows, header = {}, [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            meta[key] = value
        elif header is None:
            header = line.split(",")
        else:
            rows.append([float(v) for v in line.split(",")])
    return meta, np.array(rows), header


def execute(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> list[Path]:
    network = cfg.network()
    settings = cfg.settings()
    for p in cfg.policies:
        p.check_network(network)
    digest = cfg.digest()
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for policy in cfg.policies:
        log.info("running %s: T=%d R=%d", policy.label, cfg.horizon, cfg.replications)
        result = run_experiment(network, policy, cfg.horizon, cfg.replications, cfg.seed, workers, settings)
        path = out_dir / f"{policy.label}.csv"
        write_table(path, result, digest)
        written.append(path)
    sidecar = {
        "config": cfg.to_mapping(),
        "config_digest": digest,
        "seed": cfg.seed,
        "generator": GENERATOR_NAME,
        "version": __version__,
        "workers": workers,
        "created": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "tables": [p.name for p in written],
    }
    (out_dir / "metadata.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    return written


def _overrides(args) -> dict:
    return {
        "seed": args.seed,
        "replications": args.replications,
        "horizon": args.horizon,
        "stride": args.stride,
        "tie_break": args.tie_break,
        "reward_model": args.reward_model,
        "output": args.out_dir,
    }


def cmd_run(args) -> int:
    cfg = load(args.config).with_overrides(**_overrides(args))
    for path in execute(cfg, Path(cfg.output), args.workers):
        print(path)
    return 0


def cmd_reproduce(args) -> int:
    cfg = preset(args.setup)
    if args.out_dir is None:
        args.out_dir = str(Path("results") / args.setup)
    cfg = cfg.with_overrides(**_overrides(args))
    for path in execute(cfg, Path(cfg.output), args.workers):
        print(path)
    return 0


def _bounds_config(args) -> ExperimentConfig:
    if (args.config is None) == (args.setup is None):
        raise ConfigError("give either a config file or --setup")
    cfg = load(args.config) if args.config else preset(args.setup)
    return cfg.with_overrides(horizon=args.horizon)


def cmd_bounds(args) -> int:
    cfg = _bounds_config(args)
    network = cfg.network()
    etas = [p.eta if p.kind == "laes" else 0.0 for p in cfg.policies if p.kind in ("laes", "age")]
    if not etas:
        print("no LAES or age-based policy configured; nothing to bound")
        return 0
    print(f"N={network.n_links}  p_min={network.p_min:g}  |S|max={network.max_schedule_size}  T={cfg.horizon}")
    header = f"{'eta':>8}  {'age_bound':>12}  {'regret_bound':>20}  {'fading_age_bound':>16}  two_link(P, weak, strong)"
    print(header)
    fading_missing = False
    for eta in etas:
        rep = bound_report(network, eta, cfg.horizon)
        regret = "undefined (eta=0)" if rep.regret_bound is None else f"{rep.regret_bound:.1f}"
        if rep.fading_age_bound is None:
            fading = "-"
            fading_missing = True
        else:
            fading = f"{rep.fading_age_bound:.4g}"
        two = "-"
        if rep.two_link is not None:
            tl = rep.two_link
            two = f"({tl.period}, {tl.weak_link_avg_age:g}, {tl.strong_link_avg_age:g})"
        print(f"{eta:>8g}  {rep.age_bound:>12g}  {regret:>20}  {fading:>16}  {two}")
    if fading_missing:
        print("note: fading age bound omitted because some link has channel_on_prob = 1")
    if cfg.horizon >= 2:
        eta_star = tradeoff_eta(network.n_links, cfg.horizon, network.max_schedule_size, network.p_min)
        print(f"eta minimizing age_bound + regret_bound: {eta_star:.4g}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load(args.config).with_overrides(**_overrides(args))
    etas = [float(x) for x in args.etas.split(",")]
    cfg.policies = [PolicySpec.laes(e) for e in etas]
    network = cfg.network()
    out_dir = Path(cfg.output)
    execute(cfg, out_dir, args.workers)
    rows = ["eta,regret_mean,regret_stderr,avg_age_mean,avg_age_stderr,age_bound,regret_bound"]
    for eta in etas:
        meta, data, cols = read_table(out_dir / f"{PolicySpec.laes(eta).label}.csv")
        last = dict(zip(cols, data[-1]))
        rep = bound_report(network, eta, cfg.horizon)
        rows.append(",".join([
            _fmt(eta), _fmt(last["regret_mean"]), _fmt(last["regret_stderr"]),
            _fmt(last["avg_age_mean"]), _fmt(last["avg_age_stderr"]), _fmt(rep.age_bound),
            "" if rep.regret_bound is None else _fmt(rep.regret_bound),
        ]))
    (out_dir / "sweep.csv").write_text("\n".join(rows) + "\n")
    print("\n".join(rows))
    return 0


def cmd_show_config(args) -> int:
    sys.stdout.write(preset(args.setup).dump())
    return 0


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoisched", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_flags(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--replications", type=_positive_int)
        p.add_argument("--horizon", type=_positive_int)
        p.add_argument("--stride", type=_positive_int)
        p.add_argument("--workers", type=_positive_int, default=1)
        p.add_argument("--out-dir")
        p.add_argument("--tie-break", choices=["lowest-index", "random"])
        p.add_argument("--reward-model", choices=["bernoulli", "uniform", "pointmass"])

    p = sub.add_parser("run", help="run every policy in a config file")
    p.add_argument("config")
    sim_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="run one of the built-in setups")
    p.add_argument("setup", choices=sorted(PRESETS))
    sim_flags(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("bounds", help="print closed-form bounds")
    p.add_argument("config", nargs="?")
    p.add_argument("--setup", choices=sorted(PRESETS))
    p.add_argument("--horizon", type=_positive_int)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="LAES over a grid of eta values on one network")
    p.add_argument("config")
    p.add_argument("--etas", default="0,10,50,100,200")
    sim_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("show-config", help="print a built-in setup as a config file")
    p.add_argument("setup", choices=sorted(PRESETS))
    p.set_defaults(func=cmd_show_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
