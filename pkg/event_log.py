import datetime
import os
import sys
from threading import Lock

# Directories / log files
LOG_DIR = "logs"
ECHO = False

_lock = Lock()

# Tags: G general, D dataset, M model, O optimizer, B bench, S selftest


def configure(log_dir: str | None = None, echo: bool | None = None) -> None:
    global LOG_DIR, ECHO
    if log_dir is not None:
        LOG_DIR = str(log_dir)
    if echo is not None:
        ECHO = bool(echo)


def today_log_path() -> str:
    return os.path.join(LOG_DIR, f"log_{datetime.date.today()}.txt")


def log_event(event: str, log_type: str = "G") -> None:
    timestamp = datetime.datetime.now().strftime("%H:%M:%S")
    entry = f"[{timestamp}] [{log_type}] {event}\n"
    with _lock:
        os.makedirs(LOG_DIR, exist_ok=True)
        with open(today_log_path(), "a") as f:
            f.write(entry)
    if ECHO:
        sys.stderr.write(entry)


def read_entries(path: str | None = None, log_type: str | None = None) -> list[str]:
    path = path or today_log_path()
    if not os.path.exists(path):
        return []
    with open(path, "r") as f:
        entries = f.readlines()
    if log_type is None:
        return entries
    flt = f"[{log_type}]"
    return [e for e in entries if flt in e]
