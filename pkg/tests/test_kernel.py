"""Backend equivalence: the compiled shortest-path kernel and the pure
Python fallback must produce bit-identical distance arrays."""

from __future__ import annotations

import os
import random
import subprocess
import sys

import numpy as np
import pytest

import mrpp
from mrpp._kernel import BACKEND, pure
from mrpp._routing import routing_index

from .conftest import random_small_map

try:
    from mrpp._kernel import _cyroute
except ImportError:  # pragma: no cover - build-environment dependent
    _cyroute = None

needs_compiled = pytest.mark.skipif(
    _cyroute is None, reason="compiled kernel not built"
)


def _random_query(rng, topo):
    idx = routing_index(topo)
    mask = np.ones(idx.n, dtype=np.uint8)
    for i in range(idx.n):
        if rng.random() < 0.2:
            mask[i] = 0
    src = rng.randrange(idx.n)
    return idx, mask, src


def test_backend_is_reported():
    assert mrpp.BACKEND in ("compiled", "pure")
    assert BACKEND == mrpp.BACKEND


@needs_compiled
def test_compiled_matches_pure_exactly():
    rng = random.Random(314)
    for _ in range(40):
        topo = random_small_map(rng)
        idx, mask, src = _random_query(rng, topo)
        got = _cyroute.dijkstra_csr(idx.indptr, idx.heads, idx.lengths, mask, src)
        want = pure.dijkstra_csr(idx.indptr, idx.heads, idx.lengths, mask, src)
        assert got.dtype == want.dtype == np.float64
        assert np.array_equal(got, want)  # inf == inf, values bitwise equal


@needs_compiled
def test_compiled_early_stop_settles_target():
    rng = random.Random(271)
    for _ in range(25):
        topo = random_small_map(rng)
        idx, mask, src = _random_query(rng, topo)
        target = rng.randrange(idx.n)
        full = pure.dijkstra_csr(idx.indptr, idx.heads, idx.lengths, mask, src)
        part_c = _cyroute.dijkstra_csr(
            idx.indptr, idx.heads, idx.lengths, mask, src, target
        )
        part_p = pure.dijkstra_csr(
            idx.indptr, idx.heads, idx.lengths, mask, src, target
        )
        assert part_c[target] == part_p[target]
        assert part_c[target] == full[target]


def test_masked_source_is_unreachable_everywhere():
    rng = random.Random(9)
    topo = random_small_map(rng)
    idx = routing_index(topo)
    mask = np.ones(idx.n, dtype=np.uint8)
    mask[0] = 0
    dist = pure.dijkstra_csr(idx.indptr, idx.heads, idx.lengths, mask, 0)
    assert np.all(np.isinf(dist))


def test_source_distance_is_zero_and_masked_nodes_are_inf():
    rng = random.Random(10)
    topo = random_small_map(rng)
    idx = routing_index(topo)
    mask = np.ones(idx.n, dtype=np.uint8)
    mask[idx.n - 1] = 0
    dist = pure.dijkstra_csr(idx.indptr, idx.heads, idx.lengths, mask, 0)
    assert dist[0] == 0.0
    assert np.isinf(dist[idx.n - 1])


def test_env_var_forces_pure_backend():
    env = dict(os.environ, MRPP_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from mrpp._kernel import BACKEND; print(BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    assert out.stdout.strip() == "pure"
