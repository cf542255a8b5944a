import argparse
import logging
import time
from typing import List
from uuid import uuid4

from pydantic import ValidationError

from src.util.cli import CommandRouter
from src.util.errors import ShiftRiskException

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def format_nested_dict_to_multiline(data: dict, indent: int = 0) -> List[str]:
    """One "key: value" line per leaf of the run record; nested sections are indented four spaces."""
    lines = []
    pad = "    " * indent
    for key, value in data.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(format_nested_dict_to_multiline(value, indent + 1))
        else:
            lines.append(f"{pad}{key}: {value}")
    return lines


def format_log_to_multiline(log_dict: dict) -> str:
    return '\n'.join(format_nested_dict_to_multiline(log_dict))


class CommandLoggingMiddleware:
    """
    Runs a command handler, maps escaping exceptions to exit codes and logs
    one record per invocation.
    """

    def __init__(self, *, logger: logging.Logger) -> None:
        self._logger = logger

    def dispatch(self, router: CommandRouter, args: argparse.Namespace) -> int:
        run_id: str = str(uuid4())
        logging_dict = {
            "X-RUN-ID": run_id  # X-RUN-ID ties every log line of one invocation together
        }

        exit_code, result_dict = self._log_result(router, args)
        logging_dict["command"] = self._log_command(router, args)
        logging_dict["result"] = result_dict

        self._logger.info(format_log_to_multiline(logging_dict))
        return exit_code

    def _log_command(self, router: CommandRouter, args: argparse.Namespace) -> dict:
        arguments = {
            key: value for key, value in vars(args).items() if key != "router" and value is not None
        }
        return {"name": router.name, "arguments": arguments}

    def _log_result(self, router: CommandRouter, args: argparse.Namespace):
        """
        Executes the handler and times it.

        Returns:
        - exit_code: int
        - result_logging: dict
        """
        start_time = time.perf_counter()
        exit_code = self._execute(router, args)
        finish_time = time.perf_counter()

        result_logging = {
            "status": "successful" if exit_code == 0 else "failed",
            "exit_code": exit_code,
            "time_taken": f"{finish_time - start_time:0.4f}s",
        }
        return exit_code, result_logging

    def _execute(self, router: CommandRouter, args: argparse.Namespace) -> int:
        try:
            return router.handler(args)
        except ShiftRiskException as e:
            self._logger.error(f"{router.name} failed: {e.detail}")
            return e.exit_code
        except ValidationError as e:
            self._logger.error(f"{router.name} rejected its input: {e}")
            return EXIT_CONFIG
        except OSError as e:
            self._logger.exception(f"{router.name} failed on I/O: {e}")
            return EXIT_RUNTIME
        except Exception as e:
            self._logger.exception(f"{router.name} failed: {e}")
            return EXIT_RUNTIME
