#!/usr/bin/env python3
"""
Command-line entry point for subproduct-systems.

JSON and CSV artifacts go to stdout or to --out; logs and status lines go to
stderr. Exit codes: 0 success, 1 usage error, 2 validation failure (with a
JSON diagnostic on stderr).

Usage:
    subproduct generate --type e1 --a 0.3 --den 1 --horizon 4 --out s.json
    subproduct classify s.json --text
    subproduct probe f.json --h "0,0;1,0" --out probe.csv
"""

import argparse
import csv
import io
import json
import logging
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Tuple

import numpy as np

from .classifier import Classification, classify
from .embed import (
    build_representation,
    decide_embeddable,
    extended_probe_type1,
    liebscher_probe,
    representation_isometry_residual,
    verify_representation,
)
from .errors import (
    AssociativityError,
    AutomorphismError,
    IsometryError,
    SubproductError,
    get_error_code,
)
from .morphisms import (
    GeneratorWord,
    decompose_automorphism,
    make_automorphism,
    verify_automorphism,
)
from .numcore import DEFAULT_TOLERANCE, Tolerance, time_to_json
from .rational_time import (
    build_tower,
    eta_from_tower,
    refine_spec,
    tower_compatibility,
    tower_to_json,
)
from .serialization import (
    load_spec,
    load_system,
    read_json,
    system_to_json,
    thetas_from_json,
    thetas_to_json,
)
from .systems import (
    SystemSpec,
    SystemType,
    check_associativity,
    check_isometries,
    generate_canonical,
    restrict,
    scramble,
)

logger = logging.getLogger(__name__)

# Global quiet mode flag
QUIET_MODE = False

COMPLEX_LITERAL = re.compile(
    r"^\s*[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?"
    r"([+-](\d+\.?\d*|\.\d+)([eE][+-]?\d+)?i)?\s*$"
)


class Colors:
    """ANSI color codes for terminal output"""

    GREEN = "\033[92m"
    RED = "\033[91m"
    YELLOW = "\033[93m"
    CYAN = "\033[96m"
    BOLD = "\033[1m"
    END = "\033[0m"


def print_status(icon: str, message: str, force: bool = False) -> None:
    """Print status message with icon to stderr, respecting quiet mode."""
    if not QUIET_MODE or force:
        print(f"{icon} {message}", file=sys.stderr)
    logger.info(message)


def setup_logging(verbose: bool = False, debug: bool = False) -> None:
    """Configure stderr logging once; stdout is reserved for artifacts."""
    level = logging.DEBUG if debug else logging.INFO if verbose else logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
    )
    logging.getLogger().setLevel(level)


class UsageErrorParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_complex(text: str) -> complex:
    """Parse a "re+imi" literal such as "2+0i" or "-0.5+0.1i"."""
    if not COMPLEX_LITERAL.match(text):
        raise argparse.ArgumentTypeError(f"not a complex literal of the form re+imi: {text!r}")
    body = text.strip()
    return complex(body[:-1] + "j") if body.endswith("i") else complex(float(body))


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}")


def parse_vector(text: str) -> np.ndarray:
    """Parse "re,im;re,im" into a vector of E_1."""
    try:
        parts = [tuple(float(x) for x in item.split(",")) for item in text.split(";")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im;re,im': {text!r}")
    if len(parts) != 2 or any(len(p) != 2 for p in parts):
        raise argparse.ArgumentTypeError(f"expected two 're,im' components: {text!r}")
    return np.array([complex(re, im) for re, im in parts], dtype=complex)


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer: {text!r}")
    return value


def tolerance_value(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"tolerance must lie in (0, 1): {text!r}")
    return value


@dataclass(frozen=True)
class CommandConfig:
    """Validated invocation: one subcommand, its tolerance, paths and format."""

    subcommand: str
    tolerance: Tolerance
    inputs: Tuple[Path, ...]
    output: Optional[Path]
    output_format: str
    args: argparse.Namespace

    @classmethod
    def from_args(
        cls, args: argparse.Namespace, parser: argparse.ArgumentParser
    ) -> "CommandConfig":
        tolerance = DEFAULT_TOLERANCE
        if args.tol is not None:
            try:
                tolerance = DEFAULT_TOLERANCE.with_structural(args.tol)
            except SubproductError as e:
                parser.error(e.message)
        inputs = tuple(Path(p) for p in getattr(args, "inputs", []) if p is not None)
        for path in inputs:
            if not path.is_file():
                parser.error(f"input file not found: {path}")
        output = Path(args.out) if getattr(args, "out", None) else None
        if output is not None and not output.parent.exists():
            parser.error(f"output directory does not exist: {output.parent}")
        subcommand = args.command
        if subcommand == "auto":
            subcommand = f"auto {args.action}"
        output_format = "json"
        if subcommand in ("probe", "probe-extended"):
            output_format = "csv"
        elif getattr(args, "text", False):
            output_format = "text"
        return cls(subcommand, tolerance, inputs, output, output_format, args)


def emit(config: CommandConfig, data: Any) -> None:
    """Write a JSON artifact to --out or stdout."""
    text = json.dumps(data, indent=2, default=_json_default) + "\n"
    if config.output is None:
        sys.stdout.write(text)
        return
    config.output.write_text(text, encoding="utf-8")
    print_status("💾", f"Wrote {config.output}")


def emit_csv(config: CommandConfig, rows: List[Tuple[int, int, float, float]]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["t_num", "t_den", "re", "im"])
    for t_num, t_den, re_part, im_part in rows:
        writer.writerow([t_num, t_den, repr(re_part), repr(im_part)])
    if config.output is None:
        sys.stdout.write(buffer.getvalue())
        return
    config.output.write_text(buffer.getvalue(), encoding="utf-8")
    print_status("💾", f"Wrote {config.output}")


def spec_from_args(args: argparse.Namespace) -> SystemSpec:
    tag = SystemType(args.type)
    if tag in (SystemType.E1, SystemType.E2):
        if args.a is None:
            raise argparse.ArgumentTypeError(f"--type {tag.value} needs --a")
        return SystemSpec(tag, a=args.a)
    if tag is SystemType.E3:
        if args.lam is not None:
            return SystemSpec.e3(args.lam)
        if args.c is None:
            raise argparse.ArgumentTypeError("--type e3 needs --lambda or --c")
        return SystemSpec.e3_rational(args.c, args.b or 0.0, args.eta_choices)
    return SystemSpec(tag)


def print_classification_text(classification: Classification) -> None:
    report = classification.to_report()
    print(f"{Colors.BOLD}{Colors.CYAN}Classification{Colors.END}")
    print(f"  type:      {classification.spec.describe()}")
    if classification.c is not None:
        print(f"  c:         {classification.c:.12g}")
    print(f"  residual:  {report['residual']:.3e}")
    print(f"  margin:    {report['discriminant_margin']:.3e}")
    print(f"  variant:   {report['variant']}")
    step = classification.system.step
    print(f"  grid:      step {step}, horizon {classification.system.horizon}")


def cmd_generate(config: CommandConfig) -> int:
    args = config.args
    spec = spec_from_args(args)
    sys_, _ = generate_canonical(spec, args.den, args.horizon, config.tolerance)
    if args.seed is not None:
        sys_, _ = scramble(sys_, args.seed)
        print_status("🎲", f"Scrambled with seed {args.seed}")
    print_status("✅", f"Generated {spec.describe()} on 1/{args.den}, horizon {args.horizon}")
    emit(config, system_to_json(sys_))
    return 0


def cmd_validate(config: CommandConfig) -> int:
    sys_ = load_system(config.inputs[0], config.tolerance)
    iso, _ = check_isometries(sys_)
    assoc = check_associativity(sys_)
    if assoc > config.tolerance.eps_structural:
        raise AssociativityError("associativity diagram fails", residual=assoc)
    print_status("✅", f"{config.inputs[0]} is a valid subproduct system")
    emit(
        config,
        {
            "valid": True,
            "step": time_to_json(sys_.step),
            "horizon": sys_.horizon,
            "isometry_residual": iso,
            "associativity_residual": assoc,
        },
    )
    return 0


def cmd_classify(config: CommandConfig) -> int:
    classification = classify(load_system(config.inputs[0], config.tolerance), config.tolerance)
    if config.output_format == "text":
        print_classification_text(classification)
        return 0
    emit(config, classification.to_report())
    return 0


def cmd_restrict(config: CommandConfig) -> int:
    sys_ = restrict(load_system(config.inputs[0], config.tolerance), config.args.m)
    emit(config, system_to_json(sys_))
    return 0


def cmd_refine(config: CommandConfig) -> int:
    args = config.args
    refined = refine_spec(load_spec(config.inputs[0]), args.m, args.root)
    print_status("🔍", f"Refined by {args.m}: {refined.describe()}")
    emit(config, refined.to_json())
    return 0


def cmd_tower(config: CommandConfig) -> int:
    args = config.args
    spec = load_spec(config.inputs[0])
    tower = build_tower(
        spec, args.depth, args.root_choices, args.horizon, args.cover_unit, config.tolerance
    )
    data = tower_to_json(tower)
    data["compatibility"] = tower_compatibility(tower)
    if spec.type_tag is SystemType.E3:
        data["eta"] = eta_from_tower(tower).to_json()
    print_status("🏗️", f"Built depth-{args.depth} tower for {spec.describe()}")
    emit(config, data)
    return 0


def cmd_auto_make(config: CommandConfig) -> int:
    args = config.args
    sys_ = load_system(config.inputs[0], config.tolerance)
    classification = classify(sys_, config.tolerance)
    word = GeneratorWord(args.c, args.swap, args.b)
    auto = make_automorphism(classification, word, config.tolerance)
    print_status("✅", f"Realized {word.to_json()} (residual {auto.residual:.2e})")
    emit(config, thetas_to_json(sys_.step, auto.thetas))
    return 0


def cmd_auto_verify(config: CommandConfig) -> int:
    sys_ = load_system(config.inputs[0], config.tolerance)
    thetas = thetas_from_json(read_json(config.inputs[1]), sys_.step)
    residual = verify_automorphism(sys_, thetas)
    if residual > config.tolerance.eps_structural:
        raise AutomorphismError(
            "family does not intertwine the system with itself", residual=residual
        )
    emit(config, {"automorphism": True, "residual": residual})
    return 0


def cmd_auto_decompose(config: CommandConfig) -> int:
    sys_ = load_system(config.inputs[0], config.tolerance)
    thetas = thetas_from_json(read_json(config.inputs[1]), sys_.step)
    word = decompose_automorphism(classify(sys_, config.tolerance), thetas, config.tolerance)
    emit(config, word.to_json())
    return 0


def cmd_probe(config: CommandConfig) -> int:
    sys_ = load_system(config.inputs[0], config.tolerance)
    table = liebscher_probe(sys_, config.args.h)
    print_status("📈", f"Probe max jump {table.max_jump():.3e}")
    emit_csv(config, table.to_csv_rows())
    return 0


def cmd_probe_extended(config: CommandConfig) -> int:
    args = config.args
    table = extended_probe_type1(args.a, args.den, args.cross_check)
    if table.cross_check is not None:
        print_status("🔁", f"Kernel cross-check deviation {table.cross_check:.3e}")
    emit_csv(config, table.to_csv_rows())
    return 0


def cmd_embed_check(config: CommandConfig) -> int:
    verdict = decide_embeddable(load_spec(config.inputs[0]), tol=config.tolerance)
    icon = "✅" if verdict.embeddable else "❌"
    print_status(icon, f"{verdict.spec.describe()}: {verdict.reason or verdict.construction}")
    emit(config, verdict.to_json())
    return 0


def cmd_represent(config: CommandConfig) -> int:
    args = config.args
    spec = load_spec(config.inputs[0])
    rep = build_representation(spec, args.den, args.horizon, tol=config.tolerance)
    horizon = rep.system.horizon
    isometry = max(representation_isometry_residual(rep, k) for k in range(1, horizon + 1))
    data: Dict[str, Any] = {
        "kind": rep.kind,
        "spec": rep.spec.to_json(),
        "denominator": args.den,
        "horizon": horizon,
        "amplitude": rep.amplitude,
        "isometry_residual": isometry,
        "fock_norm_residual": rep.fock_norm_residual(),
    }
    if args.verify:
        worst, where = 0.0, (1, 1)
        for j in range(1, horizon):
            for k in range(1, horizon - j + 1):
                r = verify_representation(rep, rep.time(j), rep.time(k))
                if r > worst:
                    worst, where = r, (j, k)
        if worst > config.tolerance.eps_structural:
            raise IsometryError(
                "representation does not factor through beta",
                s=time_to_json(rep.time(where[0])),
                t=time_to_json(rep.time(where[1])),
                residual=worst,
            )
        data["verify_residual"] = worst
        print_status("✅", f"Representation verified (residual {worst:.2e})")
    emit(config, data)
    return 0


COMMANDS: Dict[str, Callable[[CommandConfig], int]] = {
    "generate": cmd_generate,
    "validate": cmd_validate,
    "classify": cmd_classify,
    "restrict": cmd_restrict,
    "refine": cmd_refine,
    "tower": cmd_tower,
    "auto make": cmd_auto_make,
    "auto verify": cmd_auto_verify,
    "auto decompose": cmd_auto_decompose,
    "probe": cmd_probe,
    "probe-extended": cmd_probe_extended,
    "embed-check": cmd_embed_check,
    "represent": cmd_represent,
}


def run(config: CommandConfig) -> int:
    """Dispatch one validated command; library errors propagate."""
    logger.debug(f"Running {config.subcommand} with {config.tolerance}")
    return COMMANDS[config.subcommand](config)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=tolerance_value, help="Structural tolerance (eps)")
    common.add_argument("--quiet", action="store_true", help="Suppress status output")
    common.add_argument("--verbose", action="store_true", help="Log at INFO level")
    common.add_argument("--debug", action="store_true", help="Log at DEBUG level")

    parser = UsageErrorParser(
        prog="subproduct",
        description="Two-dimensional subproduct systems: generate, classify, embed",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="Build a canonical system")
    p.add_argument("--type", required=True, choices=[t.value for t in SystemType])
    p.add_argument("--a", type=float, help="Parameter a of E1/E2")
    p.add_argument("--lambda", dest="lam", type=parse_complex, help='Per-step λ, e.g. "2+0i"')
    p.add_argument("--c", type=float, help="Unit-time growth of a rational E3")
    p.add_argument("--b", type=float, help="Unit-time phase of a rational E3")
    p.add_argument("--eta-choices", type=parse_int_list, help="Root choices, e.g. 0,1")
    p.add_argument("--den", type=positive_int, default=1, help="Grid denominator N")
    p.add_argument("--horizon", type=positive_int, required=True, help="Grid horizon K")
    p.add_argument("--seed", type=int, help="Scramble with seeded Haar unitaries")
    p.add_argument("--out", help="Output JSON path")

    p = sub.add_parser("validate", parents=[common], help="Validate a system file")
    p.add_argument("inputs", nargs=1, metavar="system.json")
    p.add_argument("--out", help="Output JSON path")

    p = sub.add_parser("classify", parents=[common], help="Classify a system file")
    p.add_argument("inputs", nargs=1, metavar="system.json")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON report (default)")
    fmt.add_argument("--text", action="store_true", help="Human-readable report")
    p.add_argument("--out", help="Output JSON path")

    p = sub.add_parser("restrict", parents=[common], help="Restrict to multiples of m")
    p.add_argument("inputs", nargs=1, metavar="system.json")
    p.add_argument("--m", type=positive_int, required=True)
    p.add_argument("--out", help="Output JSON path")

    p = sub.add_parser("refine", parents=[common], help="Refine a spec by m")
    p.add_argument("inputs", nargs=1, metavar="spec.json")
    p.add_argument("--m", type=positive_int, required=True)
    p.add_argument("--root", type=int, default=0, help="Root choice in [0, m)")
    p.add_argument("--out", help="Output JSON path")

    p = sub.add_parser("tower", parents=[common], help="Build a factorial tower")
    p.add_argument("inputs", nargs=1, metavar="spec.json")
    p.add_argument("--depth", type=positive_int, required=True)
    p.add_argument("--horizon", type=positive_int, default=6)
    p.add_argument("--root-choices", type=parse_int_list)
    p.add_argument("--cover-unit", action="store_true", help="Reach t = 1 at every level")
    p.add_argument("--out", help="Output JSON path")

    auto = sub.add_parser("auto", help="Automorphism calculus")
    actions = auto.add_subparsers(dest="action", required=True)
    p = actions.add_parser("make", parents=[common], help="Realize a generator word")
    p.add_argument("inputs", nargs=1, metavar="system.json")
    p.add_argument("--c", type=float, default=0.0, help="Trivial phase")
    p.add_argument("--swap", action="store_true", help="Exchange x and y (E1/E2)")
    p.add_argument("--b", type=float, help="Extra phase")
    p.add_argument("--out", help="Output thetas JSON path")
    for name, text in (("verify", "Check the diagram"), ("decompose", "Recover the word")):
        p = actions.add_parser(name, parents=[common], help=text)
        p.add_argument("inputs", nargs=2, metavar=("system.json", "thetas.json"))
        p.add_argument("--out", help="Output JSON path")

    p = sub.add_parser("probe", parents=[common], help="Continuity probe as CSV")
    p.add_argument("inputs", nargs=1, metavar="system.json")
    p.add_argument("--h", type=parse_vector, required=True, help='Vector "re,im;re,im"')
    p.add_argument("--out", help="Output CSV path")

    p = sub.add_parser("probe-extended", parents=[common], help="Two-unit shift probe")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--den", type=positive_int, required=True)
    p.add_argument("--cross-check", action="store_true", help="Recompute via e(g)")
    p.add_argument("--out", help="Output CSV path")

    p = sub.add_parser("embed-check", parents=[common], help="Type I1 embeddability")
    p.add_argument("inputs", nargs=1, metavar="spec.json")
    p.add_argument("--out", help="Output JSON path")

    p = sub.add_parser("represent", parents=[common], help="Explicit Fock representation")
    p.add_argument("inputs", nargs=1, metavar="spec.json")
    p.add_argument("--den", type=positive_int, required=True)
    p.add_argument("--horizon", type=positive_int)
    p.add_argument("--verify", action="store_true", help="Check every grid pair")
    p.add_argument("--out", help="Output JSON path")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    global QUIET_MODE

    parser = build_parser()
    args = parser.parse_args(argv)
    QUIET_MODE = getattr(args, "quiet", False)
    setup_logging(getattr(args, "verbose", False), getattr(args, "debug", False))
    config = CommandConfig.from_args(args, parser)

    try:
        return run(config)
    except argparse.ArgumentTypeError as e:
        parser.error(str(e))
    except SubproductError as e:
        logger.debug(f"{config.subcommand} failed with {get_error_code(e)}: {e.message}")
        print(json.dumps(e.to_diagnostic(), default=_json_default), file=sys.stderr)
        return 2
    except OSError as e:
        parser.error(str(e))


def _json_default(value: Any) -> Any:
    if isinstance(value, Fraction):
        return time_to_json(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return str(value)


if __name__ == "__main__":
    sys.exit(main())
