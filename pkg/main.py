#!/usr/bin/env python3
import asyncio
import platform
import sys
import uuid

import psutil
from colorama import Fore, Style, init as colorama_init

# Initialize colorama
colorama_init()

# Import the configuration manager first
from config.config_manager import config_manager

# Initialize structured logging as early as possible
config_manager.setup_structured_logging()

from utils.structured_logger import get_logger, ContextVars, operation_logger
from utils.error_handler import ErrorHandler, handle_errors, ErrorBoundary, AppError, ConfigError, SystemError
from core.performance import perf_tracker
from cli.command_handler import CommandHandler, build_parser

logger = get_logger(__name__)


def log_system_info() -> None:
    """Record the host in the log; never printed, never fatal."""
    with ErrorBoundary(error_type=SystemError, raise_error=False, log_error=False) as boundary:
        logger.info(
            "System information collected",
            extra={"structured_data": {
                "python_version": platform.python_version(),
                "system": platform.system(),
                "release": platform.release(),
                "cpu_cores": psutil.cpu_count(logical=False),
                "cpu_threads": psutil.cpu_count(),
                "memory_gb": round(psutil.virtual_memory().total / (1024 ** 3), 1),
            }}
        )
    if boundary.error:
        logger.warning(f"System information collection incomplete: {boundary.error}")


@operation_logger(operation_name="main")
async def main(args) -> int:
    """Run one subcommand and return its exit code."""
    run_id = str(uuid.uuid4())
    ContextVars.set("run_id", run_id)
    ContextVars.set("command", args.command)
    logger.info(f"Starting frustra {args.command} v{config_manager.get('version', '1.0.0')}",
                extra={"structured_data": {"run_id": run_id}})
    log_system_info()

    command_handler = CommandHandler()
    exit_code = await command_handler.handle_command(args)

    logger.debug("Command finished", extra={"structured_data": {
        "exit_code": exit_code, "metrics": perf_tracker.get_metrics()}})
    if args.debug:
        perf_tracker.print_summary()
    return exit_code


@handle_errors(error_type=ConfigError, log_error=True)
def process_command_line_args(argv=None):
    """Parse arguments and apply the global --config and --debug flags."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.config:
        config_manager.load_file(args.config)

    if args.debug:
        config_manager.set("logging.console_level", "DEBUG")
        config_manager.set("logging.file_level", "DEBUG")

    # Set up structured logging again with updated config
    config_manager.setup_structured_logging(force=True)
    return args


def run(argv=None) -> int:
    try:
        # Set up correlation ID for the application
        ContextVars.set("correlation_id", str(uuid.uuid4()))

        args = process_command_line_args(argv)
        exit_code = asyncio.run(main(args))
        logger.info("Application exited normally", extra={"structured_data": {"exit_code": exit_code}})
        return exit_code

    except KeyboardInterrupt:
        print(f"\n{Fore.CYAN}Interrupted; the seeds manifest lists the finished trials{Style.RESET_ALL}",
              file=sys.stderr)
        logger.info("Application terminated by user")
        return 1

    except Exception as e:
        app_error = ErrorHandler.handle(e, log_error=True, raise_error=False)
        print(f"{Fore.RED}Error: {app_error.user_message}{Style.RESET_ALL}", file=sys.stderr)
        if isinstance(app_error, AppError) and app_error.suggestion:
            print(f"{Fore.YELLOW}Suggestion: {app_error.suggestion}{Style.RESET_ALL}", file=sys.stderr)
        return ErrorHandler.exit_code(app_error)


if __name__ == "__main__":
    sys.exit(run())
