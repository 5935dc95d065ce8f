import inspect
import os
import logging
import sys
import threading

OUTPUT_DIR_ENV = "IDSLAB_OUTPUT_DIR"

base_path = os.getenv(OUTPUT_DIR_ENV) or os.path.join(os.getcwd(), "data", "artifacts")

# Handlers are attached and torn down per call; worker threads share them.
_lock = threading.Lock()


def set_base_path(path: str) -> None:
    """Redirect the log file into ``path`` (the CLI points it at the active run directory)."""
    global base_path
    base_path = path


def debug(message: str):
    """
    Logs a debug message.

    Args:
        message (str): The log message to be logged.
    """
    _log("DEBUG", message)


def info(message: str):
    """
    Logs an info message.

    Args:
        message (str): The log message to be logged.
    """
    _log("INFO", message)


def warning(message: str):
    """
    Logs a warning message.

    Args:
        message (str): The log message to be logged.
    """
    _log("WARNING", message)


def error(message: str):
    """
    Logs an error message.

    Args:
        message (str): The log message to be logged.
    """
    _log("ERROR", message)


def _log(level: str, message: str):
    """
    Log a message to ``<base_path>/logs.txt`` and to stderr.

    The logger is named after the calling file, two frames up the stack, so
    messages from ``spectral/engine.py`` and ``ids/lab.py`` stay distinguishable.

    Args:
        level (str): The log level of the message ("INFO", "DEBUG", "WARNING", "ERROR").
        message (str): The log message to be logged.
    """
    frame = inspect.stack()[2]
    module = os.path.basename(frame.filename)

    with _lock:
        os.makedirs(base_path, exist_ok=True)
        log_file_path = os.path.join(base_path, "logs.txt")

        logger = logging.getLogger(f"idslab.{module}")
        if not logger.handlers:
            fh = logging.FileHandler(log_file_path)
            format = "%(asctime)s - %(name)s - %(levelname)s: - %(message)s"
            formatter = logging.Formatter(format)
            fh.setFormatter(formatter)
            logger.addHandler(fh)
            # stderr keeps stdout clean for `ids-lab report | ...`
            sh = logging.StreamHandler(sys.stderr)
            sh.setFormatter(formatter)
            sh.setLevel(logging.WARNING)
            logger.addHandler(sh)

        logger.setLevel(logging.DEBUG)
        logger.propagate = False

        if level.lower() == "info":
            logger.info(message)
        elif level.lower() == "debug":
            logger.debug(message)
        elif level.lower() == "warning":
            logger.warning(message)
        elif level.lower() == "error":
            logger.error(message)

        for handler in list(logger.handlers):
            handler.close()
        logger.handlers.clear()
