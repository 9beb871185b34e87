"""Entry point for the microgrid scheduling simulator.

  python -m src.main run --config config/default.yaml --scenario 2 --out output/s2
  python -m src.main compare --config config/default.yaml --out output/compare
  python -m src.main validate --config config/default.yaml
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv

from .config_loader import RunConfig, build_run_setup, dump_config, from_mapping, load_config, with_overrides
from .models import RunReport
from .mpc_scheduler import run_scenario, validate_setup
from .report_writer import emit_comparison, emit_report, format_summary
from .validators import ConfigurationError, MicrogridError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = "config/default.yaml"
LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"
SCENARIOS = (1, 2, 3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="microgrid", description="MPC scheduling of a microgrid with DER price bids")
    parser.add_argument("--log-level", default=None, help="DEBUG / INFO / WARNING (env: MICROGRID_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="YAML config (env: MICROGRID_CONFIG)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--horizon-mode", choices=("shrinking", "fixed"), default=None)
        p.add_argument("--horizon", type=int, default=None, help="fixed horizon length (intervals)")

    run = sub.add_parser("run", help="run one scenario")
    common(run)
    run.add_argument("--scenario", type=int, choices=SCENARIOS, default=None)
    run.add_argument("--out", default=None, help="output directory (env: MICROGRID_OUT_DIR)")

    compare = sub.add_parser("compare", help="run scenarios 1-3 on one config")
    common(compare)
    compare.add_argument("--out", default=None, help="output directory (env: MICROGRID_OUT_DIR)")
    compare.add_argument("--jobs", type=int, default=1, help="parallel scenario runs")

    validate = sub.add_parser("validate", help="check a config without running")
    validate.add_argument("--config", default=None, help="YAML config (env: MICROGRID_CONFIG)")
    return parser


def configure_logging(level: Optional[str]) -> None:
    name = (level or os.getenv("MICROGRID_LOG_LEVEL") or "INFO").upper()
    numeric = getattr(logging, name, None)
    if not isinstance(numeric, int):
        raise ConfigurationError(f"unknown log level {name!r}")
    logging.basicConfig(level=numeric, format=LOG_FORMAT)
    logging.getLogger().setLevel(numeric)


def _load(args: argparse.Namespace) -> RunConfig:
    path = args.config or os.getenv("MICROGRID_CONFIG") or DEFAULT_CONFIG
    cfg = load_config(path)
    overrides: Dict[str, Any] = {
        "seed": getattr(args, "seed", None),
        "horizon.horizon_mode": getattr(args, "horizon_mode", None),
        "horizon.fixed_horizon_length": getattr(args, "horizon", None),
        "scenario": getattr(args, "scenario", None),
    }
    if getattr(args, "horizon", None) is not None and getattr(args, "horizon_mode", None) is None:
        overrides["horizon.horizon_mode"] = "fixed"
    return with_overrides(cfg, **overrides)


def _out_dir(args: argparse.Namespace, cfg: RunConfig) -> Path:
    return Path(args.out or os.getenv("MICROGRID_OUT_DIR") or cfg.output.out_dir)


def run_one(cfg_data: Dict[str, Any], scenario: int) -> RunReport:
    """Build and run one scenario from a plain config mapping (process-pool safe)."""
    cfg = from_mapping(cfg_data)
    return run_scenario(build_run_setup(cfg, scenario))


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    report = run_one(cfg.model_dump(mode="json"), cfg.scenario)
    emit_report(report, out, dump_config(cfg))
    print(format_summary([report]))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _load(args)
    try:
        cfg.require_uncertainty()
    except ValueError as exc:
        raise ConfigurationError(f"compare runs scenario 3: {exc}") from None
    out = _out_dir(args, cfg)
    data = cfg.model_dump(mode="json")
    jobs = max(1, args.jobs)

    reports: List[RunReport]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(SCENARIOS))) as pool:
            reports = list(pool.map(run_one, [data] * len(SCENARIOS), SCENARIOS))
    else:
        reports = [run_one(data, scenario) for scenario in SCENARIOS]

    # 書き出しはシナリオ順に逐次
    for report in reports:
        scenario_cfg = with_overrides(cfg, scenario=report.scenario)
        emit_report(report, out / f"scenario_{report.scenario}", dump_config(scenario_cfg))
    emit_comparison(reports, out)
    print(format_summary(reports))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    setup = build_run_setup(cfg)
    validate_setup(setup)
    print(f"ok: scenario {cfg.scenario}, {len(setup.population)} DERs, {cfg.horizon.n_k} intervals")
    return 0


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "validate": cmd_validate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        configure_logging(args.log_level)
        return COMMANDS[args.command](args)
    except MicrogridError as exc:
        logger.debug("command failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
