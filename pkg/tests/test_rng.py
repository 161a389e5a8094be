import numpy as np

from frogmodel.rng import parallel_map, substream


def test_substream_reproducible():
    a = substream(7, "walk", 3).random(5)
    b = substream(7, "walk", 3).random(5)
    assert np.array_equal(a, b)


def test_substream_keys_separate_streams():
    a = substream(7, "walk", 3).random(5)
    b = substream(7, "walk", 4).random(5)
    c = substream(8, "walk", 3).random(5)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def _square(x):
    return x * x


def test_parallel_map_order_stable():
    items = list(range(40))
    assert parallel_map(_square, items, workers=1) == [x * x for x in items]
    assert parallel_map(_square, items, workers=4) == [x * x for x in items]
