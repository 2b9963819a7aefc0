from __future__ import annotations

import hashlib
import logging
import time

import numpy as np
from rich.logging import RichHandler


def monotonic_ms() -> int:
    """Return monotonic clock in milliseconds."""
    return int(time.monotonic() * 1000)


def derive_seed(master: int, *labels: object) -> int:
    """Hash a master seed and labels into a stable 63-bit child seed."""
    raw = "\x1f".join([str(int(master)), *(str(label) for label in labels)])
    digest = hashlib.sha256(raw.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def round_rng(seed: int, t: int) -> np.random.Generator:
    """Random stream positioned by (seed, round index)."""
    return np.random.default_rng([int(seed), int(t)])


def configure_logging(verbose: bool = False) -> None:
    """Route library logging through a rich console handler."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )
