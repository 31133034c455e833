import json
import logging
from pathlib import Path
from typing import Any

import psutil

PACKAGE_ROOT = Path(__file__).resolve().parent
CORPUS_DIR = PACKAGE_ROOT / "corpus"

logger = logging.getLogger(__name__)


def load_json(filepath, default: Any = None) -> Any:
    """Read a JSON file; relative paths resolve against the package directory."""
    full_path = Path(filepath)
    if not full_path.is_absolute():
        full_path = PACKAGE_ROOT / full_path
    if full_path.exists():
        with open(full_path, 'r', encoding='utf-8') as f:
            return json.load(f)
    return [] if default is None else default


def setup_logger(name: str, log_level=logging.INFO) -> logging.Logger:
    """Set up a logger with the given name and log level.

    Args:
        name: Name of the logger
        log_level: Logging level (default: logging.INFO)

    Returns:
        Configured logger instance
    """
    from refutelint.version import __build__

    logger = logging.getLogger(name)
    logger.setLevel(log_level)

    # Console handler on stderr so logs never mix with report output
    ch = logging.StreamHandler()
    ch.setLevel(log_level)

    formatter = logging.Formatter(
        f'%(asctime)s [PID:%(process)d] [Build:{__build__}] - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )
    ch.setFormatter(formatter)

    if not logger.handlers:
        logger.addHandler(ch)
    else:
        for handler in logger.handlers:
            handler.setLevel(log_level)

    return logger


def kill_process_tree(pid: int) -> int:
    """Kill a process and all of its descendants, children first.

    Returns:
        Number of processes that were signalled.
    """
    try:
        parent = psutil.Process(pid)
    except psutil.NoSuchProcess:
        return 0

    try:
        victims = parent.children(recursive=True)
    except (psutil.NoSuchProcess, psutil.AccessDenied):
        victims = []
    victims.append(parent)

    killed = 0
    for proc in victims:
        try:
            proc.kill()
            killed += 1
        except (psutil.NoSuchProcess, psutil.AccessDenied, psutil.ZombieProcess):
            continue
    psutil.wait_procs(victims, timeout=1.0)
    logger.debug(f"Killed {killed} process(es) rooted at PID {pid}")
    return killed
