import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _helpers import brute_flatten, random_partition, random_surjection
from orthotensor.flatten import (
    FlatteningMap,
    Signature,
    flatten,
    is_compatible,
    is_strictly_compatible,
    signature_to_two_flattening,
    unflatten,
)
from orthotensor.tensor import ShapeError, Tensor, outer_product, scalar_product

S123 = FlatteningMap((1, 2, 2))


def test_flatten_example():
    T = Tensor.from_values((2, 2, 2), range(1, 9))
    np.testing.assert_array_equal(flatten(T, S123).array, [[1, 2, 3, 4], [5, 6, 7, 8]])


def test_flatten_identity(rng):
    T = Tensor(rng.standard_normal((2, 3, 2)))
    assert flatten(T, FlatteningMap.identity(3)) == T


def test_unflatten_example():
    M = Tensor([[1, 2, 3, 4], [5, 6, 7, 8]])
    U = unflatten(M, S123, (2, 2, 2))
    assert U.shape == (2, 2, 2)
    np.testing.assert_array_equal(U.values, np.arange(1, 9))


@pytest.mark.parametrize("assignment", [(1, 1, 1), (1, 2, 3), (2, 1, 2), (1, 2, 1), (3, 1, 2), (2, 2, 1)])
def test_flatten_against_definition_and_round_trip(rng, assignment):
    T = Tensor(rng.standard_normal((3, 2, 4)))
    sigma = FlatteningMap(assignment)
    F = flatten(T, sigma)
    np.testing.assert_array_equal(F.array, brute_flatten(T.array, assignment))
    assert unflatten(F, sigma, T.shape) == T


def test_unflatten_rank_one_slice(rng):
    # a rank-one factor flattened into a column and unflattened again
    B = Tensor(rng.standard_normal((2, 3)))
    a = rng.standard_normal(2)
    T = outer_product(a, B)
    col = flatten(B, FlatteningMap((1, 1)))
    assert unflatten(col, FlatteningMap((1, 1)), (2, 3)) == B
    F = flatten(T, S123).array
    np.testing.assert_allclose(unflatten(F[0], FlatteningMap((1, 1)), (2, 3)).array, a[0] * B.array)


def test_unflatten_shape_mismatch():
    with pytest.raises(ShapeError):
        unflatten(Tensor(np.zeros((2, 3))), S123, (2, 2, 2))
    with pytest.raises(ShapeError):
        flatten(Tensor(np.zeros((2, 2))), S123)


def test_flattening_map_must_be_surjective():
    with pytest.raises(ValueError):
        FlatteningMap((1, 3))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_scalar_product_invariance(d, seed):
    rng = np.random.default_rng(seed)
    shape = tuple(rng.integers(1, 5, size=d))
    sigma = FlatteningMap(random_surjection(rng, d, int(rng.integers(1, d + 1))))
    A, B = rng.standard_normal(shape), rng.standard_normal(shape)
    lhs = scalar_product(flatten(A, sigma), flatten(B, sigma))
    assert lhs == pytest.approx(scalar_product(A, B), rel=1e-12, abs=1e-12)
    assert sorted(flatten(A, sigma).values) == sorted(A.ravel())


def test_compatibility_examples():
    sig3 = Signature.singletons(3)
    assert is_compatible(FlatteningMap((1, 1, 1)), Signature(((1, 2), (3,))))
    assert is_compatible(S123, sig3)
    assert not is_compatible(S123, Signature(((1, 2), (3,))))
    assert is_strictly_compatible(S123, Signature(((1,), (2, 3))))
    assert not is_strictly_compatible(S123, sig3)
    assert is_strictly_compatible(FlatteningMap.identity(3), sig3)


def test_two_flattening_examples():
    assert signature_to_two_flattening(Signature.singletons(3), {1}).assignment == (1, 2, 2)
    assert signature_to_two_flattening(Signature(((1, 3), (2,))), {1}).assignment == (1, 2, 1)
    with pytest.raises(ValueError):
        signature_to_two_flattening(Signature.singletons(3), set())
    with pytest.raises(ValueError):
        signature_to_two_flattening(Signature.singletons(3), {1, 2, 3})


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_two_flattening_is_compatible(d, seed):
    rng = np.random.default_rng(seed)
    sig = random_partition(rng, d, kmin=2)
    split = {int(j) for j in rng.choice(np.arange(1, sig.k + 1), size=int(rng.integers(1, sig.k)), replace=False)}
    assert is_compatible(signature_to_two_flattening(sig, split), sig)


def test_signature_parse_and_validate():
    sig = Signature.parse("1|2,3")
    assert sig.blocks == ((1,), (2, 3))
    assert sig.format() == "1|2,3"
    assert Signature.parse("3,1|2").blocks == ((1, 3), (2,))
    for bad in ["1|1", "1|3", "1,,2", "a|b"]:
        with pytest.raises(ValueError):
            Signature.parse(bad)
