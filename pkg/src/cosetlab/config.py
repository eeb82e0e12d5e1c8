"""Size caps for exhaustive computations and shared acceptance thresholds.

Caps are module-level defaults held in a mutable :class:`Limits` instance so a
caller (or a test) can raise them deliberately; every exhaustive routine also
takes an explicit override argument.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources


@dataclass
class Limits:
    max_permutation_n: int = 10
    max_inversion_poly_n: int = 200
    max_group_order: int = 1_000_000
    max_tables: int = 2_000_000
    # closure is checked on every pair below this order, on a random sample above
    full_closure_check: int = 1000


LIMITS = Limits()


@lru_cache(maxsize=None)
def thresholds() -> dict[str, float]:
    """Acceptance thresholds shared by the test suite and ``reproduce``."""
    text = resources.files("cosetlab").joinpath("data/thresholds.json").read_text()
    return json.loads(text)


def data_path(name: str):
    return resources.files("cosetlab").joinpath("data", name)
