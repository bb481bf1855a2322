# app/main.py
import argparse
import logging
import sys
from collections.abc import Sequence

from app.api.v1 import analysis, answering
from app.models.reports import Outcome, RunConfig
from app.utils import settings
from app.utils.errors import CQAError, UsageError

log = logging.getLogger(__name__)

HANDLERS = {**analysis.HANDLERS, **answering.HANDLERS}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", dest="as_json", action="store_true", help="print one JSON report")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--oracle-cap", type=int, default=None)
    common.add_argument("--gblock-cap", type=int, default=None)
    common.add_argument("--workers", type=int, default=settings.FUZZ_WORKERS)

    parser = _Parser(
        prog="certainty",
        description="Consistent query answering under primary keys",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    analysis.register(subparsers, common)
    answering.register(subparsers, common)
    return parser


def _configure_logging(verbose: int) -> None:
    level = logging.getLevelName(settings.LOG_LEVEL)
    if not isinstance(level, int):
        level = logging.WARNING
    if verbose:
        level = logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def to_config(ns: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(ns).items() if k in RunConfig.model_fields and v is not None}
    return RunConfig(**fields)


def run(config: RunConfig) -> Outcome:
    handler = HANDLERS.get(config.command)
    if handler is None:
        raise UsageError(f"unknown command {config.command!r}")
    return handler(config)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        _configure_logging(ns.verbose)
        config = to_config(ns)
        outcome = run(config)
    except CQAError as e:
        log.debug("command failed", exc_info=True)
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        # pydantic validation of flag values
        print(f"error: {e}", file=sys.stderr)
        return UsageError.exit_code
    print(outcome.report.to_json() if config.as_json else outcome.text)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
