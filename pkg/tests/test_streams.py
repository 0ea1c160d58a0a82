import numpy as np

from stalemix._streams import (
    DOWNLINK,
    SCHEDULE,
    UPLINK,
    derive_key,
    extend_key,
    normals,
    permutation,
    schedule_block,
    uniforms,
)


def test_derive_key_is_stable_and_order_sensitive():
    assert derive_key(1, 2, 3) == derive_key(1, 2, 3)
    assert derive_key(1, 2, 3) != derive_key(1, 3, 2)
    assert derive_key(1, 2, 3) != derive_key(2, 2, 3)
    assert 0 <= derive_key(2**63, 2**40) < 2**64


def test_extend_key_continues_the_chain():
    assert extend_key(derive_key(7, DOWNLINK), 3, 14) == derive_key(7, DOWNLINK, 3, 14)
    assert extend_key(derive_key(7, UPLINK), 3, 14) != derive_key(7, DOWNLINK, 3, 14)


def test_uniforms_range_and_determinism():
    u = uniforms(derive_key(5, SCHEDULE, 0), 10_000)
    assert np.array_equal(u, uniforms(derive_key(5, SCHEDULE, 0), 10_000))
    assert np.all(u >= 0.0) and np.all(u < 1.0)
    assert abs(u.mean() - 0.5) < 0.02
    # distinct keys give distinct streams
    assert not np.array_equal(u, uniforms(derive_key(5, SCHEDULE, 1), 10_000))


def test_normals_moments():
    z = normals(derive_key(9, 1), 50_000)
    assert abs(z.mean()) < 0.02
    assert abs(z.var() - 1.0) < 0.03


def test_permutation_is_a_permutation():
    p = permutation(derive_key(3, 4), 40)
    assert sorted(p.tolist()) == list(range(40))
    assert np.array_equal(p, permutation(derive_key(3, 4), 40))


def test_schedule_block_rows_are_per_client_streams():
    # a client's row does not depend on how many clients share the block
    small = schedule_block(11, t=6, num_clients=3, draws=4)
    large = schedule_block(11, t=6, num_clients=8, draws=4)
    np.testing.assert_array_equal(small, large[:3])
    # and is independent across rounds
    assert not np.array_equal(small, schedule_block(11, t=7, num_clients=3, draws=4))
