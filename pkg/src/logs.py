import os
import logging
import logging.handlers as logger_handlers
from argparse import ArgumentTypeError
from src.settings import LOG_DIR


LOG_SUFFIX = "%Y%m%d_%H.log"
LOG_FORMAT = '{asctime}.{msecs:03.0f}|{levelname}|{name}|{message}'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'


class MaxLevelFilter(logging.Filter):
    """Let through only records strictly below `max_level`."""

    def __init__(self, max_level):
        super().__init__()
        self.max_level = max_level

    def filter(self, record):
        return record.levelno < self.max_level


def setup_logging(name):
    return logging.getLogger(name)


def valid_loglevel(loglevel):
    loglevel = loglevel.upper()
    if loglevel not in logging._nameToLevel.keys():
        raise ArgumentTypeError(
            "Not a valid level for loggings: {0!r}".format(loglevel)
        )
    return loglevel


def _rotating_handler(path, level):
    handler = logger_handlers.TimedRotatingFileHandler(
        path,
        when='H',
        interval=4,
        backupCount=24,
        encoding="utf-8"
    )
    handler.suffix = LOG_SUFFIX
    handler.setLevel(level)
    return handler


def configure_logging(loglevel, log_dir=LOG_DIR):
    """
    Configure the root logger for a CLI run.

    Installs:
      - A console handler for messages >= loglevel.
      - `logs_debugInfo.log` with DEBUG/INFO records.
      - `logs_warningError.log` with WARNING and above.

    Calling it twice replaces the handlers from the first call. With
    `log_dir=None` only the console handler is installed.
    """
    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()

    # Handlers filter; the root passes everything.
    root_logger.setLevel(logging.DEBUG)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT, style='{')

    stream_handler = logging.StreamHandler()
    stream_handler.setLevel(loglevel)
    stream_handler.setFormatter(formatter)
    root_logger.addHandler(stream_handler)

    if log_dir is None:
        return

    os.makedirs(log_dir, exist_ok=True)

    debug_handler = _rotating_handler(
        os.path.join(log_dir, "logs_debugInfo.log"), logging.DEBUG
    )
    debug_handler.addFilter(MaxLevelFilter(logging.WARNING))
    debug_handler.setFormatter(formatter)
    root_logger.addHandler(debug_handler)

    warning_handler = _rotating_handler(
        os.path.join(log_dir, "logs_warningError.log"), logging.WARNING
    )
    warning_handler.setFormatter(formatter)
    root_logger.addHandler(warning_handler)
