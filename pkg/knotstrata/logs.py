from __future__ import annotations
import logging
from rich.console import Console
from rich.logging import RichHandler

console = Console(stderr=True)


def setup_logging(level: int | str = logging.INFO) -> None:
    # library modules only call logging.getLogger(__name__)
    root = logging.getLogger("knotstrata")
    root.handlers.clear()
    root.addHandler(RichHandler(console=console, show_path=False, rich_tracebacks=True))
    root.setLevel(level)
    root.propagate = False
