"""Environment defaults and logging setup."""

from __future__ import annotations
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

load_dotenv()

console = Console(stderr=True)


@dataclass(frozen=True)
class LabSettings:
    """Global flags, resolved from the command line first, then the environment."""
    seed: int = 0
    threads: int = 1
    out_dir: Path = Path("lab_out")
    log_level: str = "INFO"

    @classmethod
    def from_env(
        cls,
        seed: Optional[int] = None,
        threads: Optional[int] = None,
        out_dir: Optional[str] = None,
        log_level: Optional[str] = None,
    ) -> "LabSettings":
        """Fill unset flags from LAB_* environment variables."""
        return cls(
            seed=seed if seed is not None else int(os.getenv("LAB_SEED", "0")),
            threads=max(1, threads if threads is not None else int(os.getenv("LAB_THREADS", "1"))),
            out_dir=Path(out_dir or os.getenv("LAB_OUT_DIR", "lab_out")),
            log_level=(log_level or os.getenv("LAB_LOG_LEVEL", "INFO")).upper(),
        )


def configure_logging(level: str = "INFO") -> None:
    """Install a rich handler on the root logger."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    root.addHandler(RichHandler(console=console, markup=False, show_path=False, show_time=True))
    root.setLevel(getattr(logging, level.upper(), logging.INFO))
    # matplotlib's font manager is chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
