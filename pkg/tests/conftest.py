import sys
from pathlib import Path

import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent))

torch.manual_seed(0)


@pytest.fixture(autouse=True)
def _single_threaded():
    # Keeps timings stable and bitwise assertions meaningful on shared CPUs.
    previous = torch.get_num_threads()
    torch.set_num_threads(2)
    yield
    torch.set_num_threads(previous)
