import numpy as np

from pillarmix.rng import SplitMix64

from oracles import splitmix64_scalar


def test_matches_scalar_reference():
    rng = SplitMix64(12345)
    got = rng.u64_array(8)
    want = np.array([splitmix64_scalar(12345, k) for k in range(1, 9)],
                    dtype=np.uint64)
    assert np.array_equal(got, want)


def test_counter_advances_without_overlap():
    rng = SplitMix64(7)
    a = rng.u64_array(5)
    b = rng.u64_array(5)
    want = np.array([splitmix64_scalar(7, k) for k in range(1, 11)], np.uint64)
    assert np.array_equal(np.concatenate([a, b]), want)


def test_same_seed_same_stream():
    a = SplitMix64(99).uniform(size=1000)
    b = SplitMix64(99).uniform(size=1000)
    assert np.array_equal(a, b)


def test_different_seeds_differ():
    a = SplitMix64(1).u64_array(4)
    b = SplitMix64(2).u64_array(4)
    assert not np.array_equal(a, b)


def test_uniform_unit_interval():
    u = SplitMix64(3).uniform(size=10_000)
    assert u.dtype == np.float64
    assert float(u.min()) >= 0.0 and float(u.max()) < 1.0
    # 53-bit mantissa path: mean of 10k draws lands near 1/2
    assert abs(float(u.mean()) - 0.5) < 0.02


def test_uniform_scalar_and_tuple_shapes():
    rng = SplitMix64(11)
    assert isinstance(rng.uniform(), float)
    assert rng.uniform(size=7).shape == (7,)
    assert rng.uniform(size=(2, 3, 4)).shape == (2, 3, 4)


def test_scalar_draw_consumes_one_counter():
    a = SplitMix64(11)
    first = a.uniform()
    b = SplitMix64(11)
    assert first == b.uniform(size=2)[0]


def test_uniform_range_remap():
    u = SplitMix64(5).uniform(-2.0, 6.0, size=5000)
    assert float(u.min()) >= -2.0 and float(u.max()) < 6.0


def test_symmetric_scale():
    s = SplitMix64(8).symmetric(0.25, size=5000)
    assert float(np.abs(s).max()) <= 0.25
    assert float(s.min()) < 0.0 < float(s.max())


def test_symmetric_derivation():
    # symmetric(scale) is (2u - 1) * scale over the same counter stream
    u = SplitMix64(42).uniform(size=64)
    s = SplitMix64(42).symmetric(1.5, size=64)
    assert np.allclose(s, (2.0 * u - 1.0) * 1.5, atol=0, rtol=0)
