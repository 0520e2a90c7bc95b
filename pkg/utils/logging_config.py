"""Logging configuration for the forgetting benchmark."""
import logging
import sys
from utils.config import Config


def setup_logging(log_level: str = "INFO") -> logging.Logger:
    """Setup application logging."""
    log_dir = Config.LOG_PATH
    log_dir.mkdir(parents=True, exist_ok=True)

    # Configure logging format
    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    logger = logging.getLogger("forgetting_bench")
    logger.setLevel(getattr(logging, log_level.upper()))

    # Remove existing handlers
    logger.handlers.clear()

    # Console handler
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(logging.Formatter(log_format, date_format))
    logger.addHandler(console_handler)

    # File handler
    file_handler = logging.FileHandler(log_dir / "app.log")
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(log_format, date_format))
    logger.addHandler(file_handler)

    return logger


def set_level(log_level: str):
    """Change the level of the application logger and its console handler."""
    level = getattr(logging, log_level.upper())
    logger.setLevel(min(level, logging.DEBUG))
    for handler in logger.handlers:
        if isinstance(handler, logging.FileHandler):
            continue
        handler.setLevel(level)


# Initialize logger
logger = setup_logging(Config.LOG_LEVEL)
