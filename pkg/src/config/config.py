import sys

from src.config.settings import LOG_LEVEL


APP_NAME = "ShiftRisk"
VERSION = "v1.0.0"


logging_config = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        # one block per command run, written by CommandLoggingMiddleware
        "detailed": {
            "format": (
                "Time: %(asctime)s\n"
                "Process: %(process)s\n"
                "Level: %(levelname)s\n"
                "Logger: %(name)s\n"
                "Message: %(message)s\n"
                "------------------------------------------------------\n"
            )
        },
        # per-cell and per-quadrature progress lines, possibly from pool workers
        "compact": {
            "format": "%(asctime)s [%(process)s] %(levelname)s %(name)s.%(funcName)s: %(message)s"
        },
    },
    "handlers": {
        "console": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "formatter": "detailed",
            "stream": sys.stderr,
        },
        "progress": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "formatter": "compact",
            "stream": sys.stderr,
        },
    },
    "loggers": {
        "src.services": {"level": LOG_LEVEL, "handlers": ["progress"], "propagate": False},
        "src.util": {"level": LOG_LEVEL, "handlers": ["progress"], "propagate": False},
    },
    "root": {
        "level": LOG_LEVEL,
        "handlers": ["console"],
    }
}
