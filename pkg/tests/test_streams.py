"""
Tests for deterministic substreams and chunked execution
"""
import numpy as np

from fbmpersist.core.streams import (
    DOMAIN_HURST,
    DOMAIN_PATHS,
    chunks,
    derive_seed,
    map_chunks,
    substream,
)


def test_substreams_are_reproducible_and_distinct():
    a = substream(9, DOMAIN_PATHS, 0).standard_normal(4)
    b = substream(9, DOMAIN_PATHS, 0).standard_normal(4)
    c = substream(9, DOMAIN_HURST, 0).standard_normal(4)
    d = substream(9, DOMAIN_PATHS, 1).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_derived_seeds():
    assert derive_seed(1, 3) == derive_seed(1, 3)
    assert derive_seed(1, 3) != derive_seed(1, 4)
    assert 0 <= derive_seed(2**64 - 1, 0) < 2**64


def test_chunk_boundaries():
    assert [c.count for c in chunks(10, 4)] == [4, 4, 2]
    assert [c.start for c in chunks(10, 4)] == [0, 4, 8]
    assert chunks(0, 4) == []


def test_map_chunks_keeps_order():
    def first_draw(chunk):
        return substream(5, DOMAIN_PATHS, chunk.index).random(chunk.count)

    serial = np.concatenate(map_chunks(first_draw, 1000, 64, workers=1))
    threaded = np.concatenate(map_chunks(first_draw, 1000, 64, workers=8))
    assert np.array_equal(serial, threaded)
