"""
structlog setup for the lab.

Experiments report on stdout; every log record goes to stderr so a report
piped into a file or compared byte-for-byte never picks up log lines.
JSON_LOGS and LOG_LEVEL are read by the CLI and passed in here.
"""
import structlog
import logging
import sys
from typing import Any

def configure_logging(json_logs: bool = True, level: str = "INFO") -> None:
    """
    Route structlog through stdlib logging on stderr.

    Args:
        json_logs: One JSON object per event (suite runs, CI logs) when True,
                   coloured key=value lines for terminal sessions otherwise.
        level: Level name such as "INFO" or "DEBUG"; unknown names fall back
               to INFO. DEBUG shows the clamped-information diagnostics.
    """
    # experiment, seed, latency_ms etc. arrive as event keywords
    shared_processors = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    renderer = structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer()

    structlog.configure(
        processors=shared_processors + [renderer],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    # force replaces handlers left by an earlier call in the same process
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level.upper(), logging.INFO),
        force=True,
    )


def get_logger(name: str = __name__) -> Any:
    """Lazy structlog logger named after the calling module (lab modules pass __name__)."""
    return structlog.get_logger(name)
