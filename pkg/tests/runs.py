"""Shared end-to-end operator runs, computed once per session."""
from __future__ import annotations

import time
from functools import lru_cache

from haloslopes.upop import assemble_up, char_series, load_gallery
from haloslopes.weights import WeightCharacter, min_t_valuation

N_MAX = 12
PRECISION = 90
DEGREE_CAPS = (24, 26)
CONFIGS = [(p, name) for p in (3, 2) for name in ("trivial", "h1_twisted", "h2_twisted")]


def boundary_weight(p: int) -> WeightCharacter:
    """Weight with a wild character of v(T_a) = 1/2 in the first coordinate."""
    conductor = 4 if p == 2 else 2
    return WeightCharacter(p, (0, 0), (conductor, 1), wild_k=(1, 0))


@lru_cache(maxsize=None)
def run(p: int, name: str, D: int):
    g = load_gallery()[name]
    w = boundary_weight(p)
    start = time.time()
    M = assemble_up(w, g, (1, 0), D, PRECISION)
    cs = char_series(M, N_MAX)
    return {"weight": w, "h": g.h, "matrix": M, "series": cs, "seconds": time.time() - start,
            "vTa": min_t_valuation(w).value}
