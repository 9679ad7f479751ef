"""
Command-line interface for rw_integrals.

Usage:
    python -m src.rw_integrals <command> CONFIG [options]

Commands:
    validate     Check a problem file against the standing assumptions
    identities   Run the randomized identity suite
    connection   Export one connection matrix A_kp as JSON (and CSV)
    flatness     Check integrability of the assembled system
    verify-ode   Compare finite differences of the period integrals with A_kp F

Exit codes: 0 when every check passes, 1 when a check fails or a numerical
routine gives up, 2 for usage and configuration errors.
"""

import argparse
import os
import sys
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .config import config_digest, load_problem_file, read_json, validate
from .connection import all_derivatives, assemble, derivative_pairs, flatness_residual
from .error_handler import EXIT_CHECK_FAILURE, EXIT_OK, ErrorHandler
from .identity_suite import run_suite
from .integrator import CycleSpec, build_cycle, ode_convergence, rw_integral, verify_ode
from .logging.config import ENVIRONMENT_VARIABLES, LoggingConfig
from .logging.logger import configure_logging, get_logger
from .models.exceptions import RWIntegralError, ValidationError
from .models.problem import ProblemConfig
from .reporting.export import matrix_json, write_matrix_csv, write_matrix_json
from .reporting.run_report import ResourceMonitor, RunReport
from .routing.command_router import CommandRouter, parse_derivative, parse_pairs

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
H_SWEEP_STEPS = 3

DEFAULT_SETTINGS: Dict[str, Any] = {
    "log_level": "INFO",
    "log_dir": "logs",
    "console_output": True,
    "log_max_file_size_mb": 10,
    "log_backup_count": 5,
    "performance_logging": True,
    "seed": 0,
    "samples": 100,
    "identity_tolerance": 1e-9,
    "rejection_margin": 1e-3,
    "flatness_h": 1e-5,
    "flatness_tolerance": 1e-5,
    "ode_h": 1e-4,
    "ode_tolerance": 1e-3,
    "quadrature_tolerance": 1e-8,
    "max_refinements": 5,
    "workers": None,
}

# LoggingConfig field -> settings key
_LOGGING_SETTINGS = {
    "level": "log_level",
    "log_dir": "log_dir",
    "max_file_size_mb": "log_max_file_size_mb",
    "backup_count": "log_backup_count",
    "console_output": "console_output",
    "enable_performance_logging": "performance_logging",
}

_POSITIVE_FLOATS = ("identity_tolerance", "rejection_margin", "flatness_h", "flatness_tolerance",
                    "ode_h", "ode_tolerance", "quadrature_tolerance")


def load_settings(args: argparse.Namespace, environ: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    """
    Merge runtime settings in order of precedence:
    1. DEFAULT_SETTINGS
    2. the --settings JSON file
    3. RW_SEED and the RW_LOG_* variables from the environment
    4. command line flags

    Raises:
        ParseError: If the settings file is not valid JSON
        ValidationError: Listing every invalid setting
    """
    environ = os.environ if environ is None else environ
    settings = dict(DEFAULT_SETTINGS)
    errors: List[str] = []

    if getattr(args, "settings", None):
        file_settings = read_json(args.settings)
        if not isinstance(file_settings, dict):
            raise ValidationError("Settings file must contain a JSON object", field="settings")
        unknown = sorted(set(file_settings) - set(DEFAULT_SETTINGS))
        if unknown:
            errors.append(f"unknown settings: {unknown}")
        settings.update({key: value for key, value in file_settings.items() if key in DEFAULT_SETTINGS})

    if environ.get("RW_SEED"):
        try:
            settings["seed"] = int(environ["RW_SEED"])
        except ValueError:
            errors.append(f"RW_SEED must be an integer, got '{environ['RW_SEED']}'")
    try:
        logging_config = LoggingConfig.from_environment(environ)
    except ValueError as e:
        errors.append(str(e))
    else:
        for variable, field in ENVIRONMENT_VARIABLES.items():
            if environ.get(variable):
                settings[_LOGGING_SETTINGS[field]] = getattr(logging_config, field)

    overrides = {
        "seed": getattr(args, "seed", None),
        "log_level": getattr(args, "log_level", None),
        "log_dir": getattr(args, "log_dir", None),
        "workers": getattr(args, "workers", None),
    }
    settings.update({key: value for key, value in overrides.items() if value is not None})
    if settings["log_dir"] == "":
        settings["log_dir"] = None

    _validate_settings(settings, errors)
    return settings


def _validate_settings(settings: Dict[str, Any], errors: Optional[List[str]] = None) -> None:
    """Collect every invalid value and raise one ValidationError naming them all."""
    errors = list(errors or [])

    if str(settings.get("log_level", "")).upper() not in LOG_LEVELS:
        errors.append(f"log_level must be one of {LOG_LEVELS}, got {settings.get('log_level')!r}")
    else:
        settings["log_level"] = str(settings["log_level"]).upper()

    for key in _POSITIVE_FLOATS:
        value = settings.get(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            errors.append(f"{key} must be a positive number, got {value!r}")

    for key, minimum in (("seed", 0), ("samples", 1), ("max_refinements", 0),
                         ("log_max_file_size_mb", 1), ("log_backup_count", 0)):
        value = settings.get(key)
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            errors.append(f"{key} must be an integer >= {minimum}, got {value!r}")

    workers = settings.get("workers")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
        errors.append(f"workers must be null or a positive integer, got {workers!r}")

    for key in ("console_output", "performance_logging"):
        if not isinstance(settings.get(key), bool):
            errors.append(f"{key} must be true or false")

    log_dir = settings.get("log_dir")
    if log_dir is not None and not isinstance(log_dir, str):
        errors.append(f"log_dir must be a string or null, got {log_dir!r}")

    if errors:
        raise ValidationError("Invalid settings: " + "; ".join(errors), field="settings")


class RWIntegralsCLI:
    """Command handlers sharing settings, router and error handling."""

    def __init__(self, settings: Dict[str, Any]):
        self.settings = settings
        self.logger = get_logger(__name__)
        self.error_handler = ErrorHandler()
        self.router = CommandRouter()
        for command, handler in (("validate", self.cmd_validate),
                                 ("identities", self.cmd_identities),
                                 ("connection", self.cmd_connection),
                                 ("flatness", self.cmd_flatness),
                                 ("verify-ode", self.cmd_verify_ode)):
            self.router.register_handler(command, handler)

    def run(self, command: str, params: Dict[str, Any], report_path: Optional[str] = None) -> int:
        """Run one command and return the process exit code."""
        self.logger.log_command(command, params)
        report = RunReport(command, seed=self.settings["seed"], parameters=params)
        exit_code = EXIT_OK
        with ResourceMonitor() as monitor:
            try:
                self.router.route(command, params, report=report)
            except Exception as e:
                context = self.error_handler.create_context(command, params, params.get("config_path"))
                response = self.error_handler.handle_error(e, context)
                report.error = response["error"]
                exit_code = response["exit_code"]
                message = e.message if isinstance(e, RWIntegralError) else str(e)
                print(f"error: {message}", file=sys.stderr)
        report.finish(monitor)

        if exit_code == EXIT_OK and not report.passed:
            exit_code = EXIT_CHECK_FAILURE
        if report_path:
            report.write(report_path)
        self.logger.info(f"Command finished: {command}", command={
            "name": command, "pass": report.passed, "exit_code": exit_code, "type": "end"})
        return exit_code

    def _load(self, config_path: str, report: RunReport) -> Tuple[ProblemConfig, Optional[Dict[str, Any]]]:
        cfg, cycle = load_problem_file(config_path)
        report.config_digest = config_digest(cfg)
        violations = validate(cfg)
        if violations:
            for violation in violations:
                print(f"violation: {violation.condition}: {violation.message}")
            conditions = sorted({violation.condition for violation in violations})
            report.extra["violations"] = [violation.to_dict() for violation in violations]
            raise ValidationError(
                f"Configuration violates {len(violations)} standing assumption(s): {', '.join(conditions)}",
                field="config",
            )
        return cfg, cycle

    def cmd_validate(self, config_path: str, report: RunReport) -> None:
        cfg, _ = self._load(config_path, report)
        report.extra.update({"n1": cfg.n1, "n2": cfg.n2})
        print(f"valid: n1={cfg.n1} n2={cfg.n2} digest={report.config_digest}")

    def cmd_identities(self, config_path: str, report: RunReport, seed: Optional[int] = None,
                       samples: Optional[int] = None, tolerance: Optional[float] = None,
                       checks: Optional[List[str]] = None) -> None:
        cfg, _ = self._load(config_path, report)
        seed = self.settings["seed"] if seed is None else seed
        report.seed = seed
        with self.logger.time_operation("identity suite"):
            results = run_suite(
                cfg, np.random.default_rng(seed),
                samples=samples or self.settings["samples"],
                tolerance=tolerance or self.settings["identity_tolerance"],
                workers=self.settings["workers"],
                margin=self.settings["rejection_margin"],
                checks=checks,
            )
        for result in results:
            report.add_residual(result)
            status = "PASS" if result.passed else "FAIL"
            print(f"{result.check_id:<18} {result.residual:.3e}  {status}")
        print(f"{sum(r.passed for r in results)}/{len(results)} identity checks passed")

    def cmd_connection(self, config_path: str, deriv: str, report: RunReport,
                       out: Optional[str] = None, csv: Optional[str] = None) -> None:
        cfg, _ = self._load(config_path, report)
        k, p = parse_derivative(deriv)
        matrix = assemble(k, p, cfg)
        if out:
            write_matrix_json(matrix, out)
        else:
            print(matrix_json(matrix))
        if csv:
            write_matrix_csv(matrix, csv)
        report.extra.update({"deriv": [k, p], "size": matrix.size, "out": out, "csv": csv})

    def cmd_flatness(self, config_path: str, report: RunReport, pairs: str = "all",
                     h: Optional[float] = None, tolerance: Optional[float] = None) -> None:
        cfg, _ = self._load(config_path, report)
        h = h or self.settings["flatness_h"]
        tolerance = tolerance or self.settings["flatness_tolerance"]
        selected = parse_pairs(pairs)
        if selected is None:
            selected = derivative_pairs(cfg)
        if not selected:
            raise ValidationError("The configuration has a single derivative; nothing to commute",
                                  field="pairs")
        with self.logger.time_operation("flatness"):
            for deriv_a, deriv_b in selected:
                residual = flatness_residual(cfg, deriv_a, deriv_b, h)
                halved = flatness_residual(cfg, deriv_a, deriv_b, h / 2)
                ratio = residual / halved if halved > 0 else float("inf")
                check_id = f"flatness[{deriv_a[0]},{deriv_a[1]}|{deriv_b[0]},{deriv_b[1]}]"
                passed = report.add_check(check_id, residual, tolerance, h=h, halved=halved, ratio=ratio)
                print(f"{check_id:<22} {residual:.3e}  h/2: {halved:.3e}  ratio {ratio:6.2f}  "
                      f"{'PASS' if passed else 'FAIL'}")

    def cmd_verify_ode(self, config_path: str, report: RunReport, cycle: Optional[str] = None,
                       radius: Optional[float] = None, deriv: Optional[List[str]] = None,
                       h: Optional[float] = None, h_sweep: bool = False,
                       tolerance: Optional[float] = None) -> None:
        cfg, file_cycle = self._load(config_path, report)
        if cycle is not None:
            spec = CycleSpec.parse(cycle, radius)
        elif file_cycle is not None:
            spec = CycleSpec.from_dict(file_cycle)
            if radius is not None:
                spec = CycleSpec(spec.gamma1, spec.gamma2, radius)
        else:
            raise ValidationError("No cycle given: pass --cycle or add a \"cycle\" object to the problem file",
                                  field="cycle")
        derivs = [parse_derivative(item) for item in deriv] if deriv else all_derivatives(cfg)
        h = h or self.settings["ode_h"]
        tolerance = tolerance or self.settings["ode_tolerance"]
        options = {"tolerance": self.settings["quadrature_tolerance"],
                   "max_refinements": self.settings["max_refinements"],
                   "workers": self.settings["workers"]}
        report.extra["cycle"] = spec.to_dict()

        with self.logger.time_operation("period integrals"):
            base = rw_integral(build_cycle(cfg, spec), cfg, **options)
        report.extra.update({"level": base.level, "levels": base.levels, "estimate": base.estimate})
        print(f"cycle {spec.gamma1},{spec.gamma2}: level {base.level}, estimate {base.estimate:.2e}")

        for k, p in derivs:
            if h_sweep:
                steps = [h / 2 ** n for n in range(H_SWEEP_STEPS)]
                results = ode_convergence(k, p, spec, cfg, steps, base=base, **options)
            else:
                results = [verify_ode(k, p, spec, cfg, h, base=base, **options)]
            previous = None
            for result in results:
                ratio = previous / result.residual if previous and result.residual > 0 else None
                passed = report.add_check(f"ode[{k},{p}]", result.residual, tolerance,
                                          h=result.h, level=result.level, ratio=ratio)
                ratio_text = f"ratio {ratio:6.2f}" if ratio is not None else " " * 12
                print(f"d/dt{k}{p}  h={result.h:.2e}  residual {result.residual:.3e}  {ratio_text}  "
                      f"{'PASS' if passed else 'FAIL'}")
                previous = result.residual


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--settings", metavar="PATH", help="Runtime settings (JSON)")
    common.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=None,
                        help="Logging level (default: from settings)")
    common.add_argument("--log-dir", metavar="PATH", default=None,
                        help="Directory for the rotating log file; empty disables it")
    common.add_argument("--report", metavar="PATH", help="Write the run report as JSON")
    common.add_argument("--seed", type=int, default=None, help="Random seed (default: RW_SEED or settings)")
    common.add_argument("--workers", type=int, default=None, metavar="N", help="Worker threads")

    parser = argparse.ArgumentParser(
        prog="rw-integrals",
        description="Riemann-Wirtinger integrals on E x E: identities, connection matrices, ODE checks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s validate config/problems/sample_1x1.json
  %(prog)s identities config/problems/sample_1x1.json --samples 10 --seed 7
  %(prog)s connection config/problems/sample_1x1.json --deriv 1,1 --out A11.json --csv A11.csv
  %(prog)s flatness config/problems/sample_2x2.json --pairs 1,1:2,1
  %(prog)s verify-ode config/problems/sample_1x1.json --cycle 0,0 --deriv 1,1 --h-sweep
        """,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    validate_parser = subparsers.add_parser("validate", parents=[common], help="Validate a problem file")
    validate_parser.add_argument("config_path", metavar="CONFIG")

    identities = subparsers.add_parser("identities", parents=[common], help="Run the identity suite")
    identities.add_argument("config_path", metavar="CONFIG")
    identities.add_argument("--samples", type=int, default=None, help="Samples per check")
    identities.add_argument("--tol", dest="tolerance", type=float, default=None, help="Relative tolerance")
    identities.add_argument("--checks", default=None, help="Comma separated check ids (default: all)")

    connection = subparsers.add_parser("connection", parents=[common], help="Export A_kp")
    connection.add_argument("config_path", metavar="CONFIG")
    connection.add_argument("--deriv", required=True, metavar="K,P", help="Derivative d/dt_kp")
    connection.add_argument("--out", metavar="PATH", help="JSON output (default: stdout)")
    connection.add_argument("--csv", metavar="PATH", help="Also write CSV")

    flatness = subparsers.add_parser("flatness", parents=[common], help="Check integrability")
    flatness.add_argument("config_path", metavar="CONFIG")
    flatness.add_argument("--pairs", default="all", help="'all' or 'k,p:l,q;...'")
    flatness.add_argument("--h", type=float, default=None, help="Finite difference step")
    flatness.add_argument("--tol", dest="tolerance", type=float, default=None)

    ode = subparsers.add_parser("verify-ode", parents=[common], help="Check d F = A F on a cycle")
    ode.add_argument("config_path", metavar="CONFIG")
    ode.add_argument("--cycle", default=None, metavar="G1,G2", help="e.g. 0,0  inf,inf  j2,0")
    ode.add_argument("--radius", type=float, default=None, help="Pochhammer loop radius")
    ode.add_argument("--deriv", action="append", default=None, metavar="K,P",
                     help="Derivative to check (repeatable; default: all)")
    ode.add_argument("--h", type=float, default=None, help="Finite difference step")
    ode.add_argument("--h-sweep", action="store_true", help="Halve h twice and print the convergence table")
    ode.add_argument("--tol", dest="tolerance", type=float, default=None)
    return parser


_COMMAND_PARAMETERS = {
    "validate": (),
    "identities": ("samples", "tolerance", "checks"),
    "connection": ("deriv", "out", "csv"),
    "flatness": ("pairs", "h", "tolerance"),
    "verify-ode": ("cycle", "radius", "deriv", "h", "h_sweep", "tolerance"),
}


def command_parameters(args: argparse.Namespace) -> Dict[str, Any]:
    """Router parameters of the parsed subcommand; unset options are left out."""
    params: Dict[str, Any] = {"config_path": args.config_path}
    for name in _COMMAND_PARAMETERS[args.command]:
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    if args.command == "identities":
        if "checks" in params:
            params["checks"] = [item.strip() for item in params["checks"].split(",") if item.strip()]
        if args.seed is not None:
            params["seed"] = args.seed
    return params


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, configure logging and run one command; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = ErrorHandler()

    try:
        settings = load_settings(args)
    except RWIntegralError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return handler.exit_code(handler.get_error_severity(e))

    logging_config = LoggingConfig(
        level=settings["log_level"],
        log_dir=settings["log_dir"],
        max_file_size_mb=settings["log_max_file_size_mb"],
        backup_count=settings["log_backup_count"],
        console_output=settings["console_output"],
        enable_performance_logging=settings["performance_logging"],
    )
    configure_logging(
        log_level=logging_config.level,
        log_dir=logging_config.log_dir,
        max_bytes=logging_config.max_bytes,
        backup_count=logging_config.backup_count,
        console_output=logging_config.console_output,
        performance_logging=logging_config.enable_performance_logging,
    )
    cli = RWIntegralsCLI(settings)
    return cli.run(args.command, command_parameters(args), args.report)


if __name__ == "__main__":
    sys.exit(main())
