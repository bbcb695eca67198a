"""Process-level execution controls: seeding and thread caps."""

from __future__ import annotations

import os
import random

import numpy as np
import torch

THREADS_ENV = "TIMEMAR_THREADS"


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def apply_thread_cap(strict: bool = False) -> int:
    """Cap torch parallelism from TIMEMAR_THREADS; strict mode forces one thread."""
    if strict:
        threads = 1
    else:
        raw = os.environ.get(THREADS_ENV, "")
        try:
            threads = int(raw) if raw else 0
        except ValueError:
            threads = 0
    if threads > 0:
        torch.set_num_threads(threads)
    return torch.get_num_threads()
