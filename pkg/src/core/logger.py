"""Shared logger for the harmonium toolkit.

Modules do `log = logger.get_logger()`. The level comes from DWH_LOG_LEVEL and a
single run can override it with `set_level` (the CLI's --log-level).
"""

import datetime
import logging

import config

LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(name)s.%(funcName)s] %(message)s"


def _level(name) -> int:
    level = logging.getLevelName(str(name).upper())
    return level if isinstance(level, int) else logging.INFO


# Every module logs through "core"; records propagate to the root handler.
logger = logging.getLogger("core")

logging.basicConfig(
    level=_level(config.DWH_LOG_LEVEL),
    format=LOG_FORMAT,
    datefmt="%Y-%m-%d %H:%M:%S",
)


def get_logger():
    return logger


def set_level(name: str) -> None:
    logger.setLevel(_level(name))


def format_date(dt: datetime.datetime) -> str:
    return dt.strftime("%Y-%m-%d %H:%M")


def format_duration(seconds: float) -> str:
    minutes, secs = divmod(float(seconds), 60.0)
    if minutes >= 60:
        hours, minutes = divmod(minutes, 60.0)
        return f"{int(hours)}h{int(minutes):02d}m"
    if minutes:
        return f"{int(minutes)}m{secs:04.1f}s"
    return f"{secs:.2f}s"
