import numpy as np
import pytest

from dpratio.numerics import RngHandle


class ScriptedRng(RngHandle):
    """Returns queued noise values (0 once the queue is empty) and counts variates drawn."""

    def __init__(self, values=()):
        super().__init__(0, 0)
        self.queue = list(values)
        self.draws = 0

    def _next(self, size):
        n = 1 if size is None else int(np.prod(size))
        self.draws += n
        out = [self.queue.pop(0) if self.queue else 0.0 for _ in range(n)]
        return float(out[0]) if size is None else np.array(out, dtype=float).reshape(size)

    def laplace(self, mu, b, size=None):
        return mu + self._next(size)

    def normal(self, mu, sigma, size=None):
        return mu + self._next(size)


@pytest.fixture
def scripted():
    return ScriptedRng


@pytest.fixture
def rng():
    return RngHandle(20240611, 0)
