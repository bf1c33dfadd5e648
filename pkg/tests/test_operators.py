import json
import math

import numpy as np
import pytest

from qw1.errors import (
    CapExceeded,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidInput,
    NotAState,
    NotHermitian,
    NotTraceless,
)
from qw1.operators import (
    DensityMatrix,
    HermitianOperator,
    QuditLayout,
    UnitaryBasis,
    basis_state,
    dephase,
    dim_cap,
    embed_operator,
    haar_unitary,
    load_operator,
    matrix_from_json,
    matrix_to_json,
    maximally_entangled,
    maximally_mixed,
    operator_from_json,
    operator_norm,
    operator_to_json,
    partial_trace,
    permute_sites,
    random_density,
    random_traceless,
    relative_entropy,
    replace_with_maximally_mixed,
    save_operator,
    tensor_product,
    trace_norm,
    von_neumann_entropy,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_layout_basics():
    lay = QuditLayout(2, 3)
    assert lay.dim == 8
    assert list(lay.sites()) == [1, 2, 3]
    assert lay.check_site(2) == 2
    with pytest.raises(IndexOutOfRange):
        lay.check_site(0)
    with pytest.raises(IndexOutOfRange):
        lay.check_site(4)


def test_layout_validation():
    with pytest.raises(DimensionMismatch):
        QuditLayout(1, 2)
    with pytest.raises(DimensionMismatch):
        QuditLayout(2, 0)
    with pytest.raises(CapExceeded):
        QuditLayout(2, 6)  # 64 > 32


def test_cap_env(monkeypatch):
    monkeypatch.setenv("QW1_DIM_CAP", "64")
    assert dim_cap() == 64
    QuditLayout(2, 6)
    monkeypatch.setenv("QW1_DIM_CAP", "8")
    with pytest.raises(CapExceeded):
        QuditLayout(2, 4)
    monkeypatch.setenv("QW1_DIM_CAP", "junk")
    with pytest.raises(InvalidInput):
        dim_cap()


def test_hermitian_symmetrization_and_rejection():
    lay = QuditLayout(2, 1)
    # tiny skew part is absorbed
    m = np.array([[1.0, 1e-12j], [0.0, -1.0]])
    h = HermitianOperator(lay, m)
    assert np.abs(h.matrix - h.matrix.conj().T).max() == 0.0
    with pytest.raises(NotHermitian):
        HermitianOperator(lay, np.array([[0, 1], [0, 0]], dtype=complex))


def test_density_validation():
    lay = QuditLayout(2, 1)
    with pytest.raises(NotAState):
        DensityMatrix(lay, np.diag([1.5, -0.5]))
    with pytest.raises(NotAState):
        DensityMatrix(lay, np.diag([0.6, 0.6]))
    rho = DensityMatrix(lay, np.diag([0.25, 0.75]))
    assert rho.eigenvalues().min() >= 0.0


def test_arithmetic_and_traceless():
    lay = QuditLayout(2, 1)
    x = HermitianOperator(lay, SZ)
    y = x + x
    assert np.allclose(y.matrix, 2 * SZ)
    assert np.allclose((2.5 * x).matrix, 2.5 * SZ)
    assert np.allclose((x - x).matrix, 0)
    x.require_traceless()
    with pytest.raises(NotTraceless):
        HermitianOperator(lay, np.eye(2)).require_traceless()


def test_partial_trace_product():
    a = DensityMatrix(QuditLayout(2, 1), np.diag([0.3, 0.7]))
    b = DensityMatrix(QuditLayout(2, 1), np.diag([0.9, 0.1]))
    ab = tensor_product(a, b)
    assert isinstance(ab, DensityMatrix)
    assert np.allclose(partial_trace(ab, 2).matrix, a.matrix)
    assert np.allclose(partial_trace(ab, 1).matrix, b.matrix)


def test_partial_trace_entangled_and_multisite():
    gam = maximally_entangled(2)
    assert np.allclose(partial_trace(gam, 1).matrix, np.eye(2) / 2)
    assert np.allclose(partial_trace(gam, 2).matrix, np.eye(2) / 2)
    lay = QuditLayout(2, 3)
    rho = random_density(lay, seed=3)
    m12 = partial_trace(rho, [1, 2])
    assert m12.layout == QuditLayout(2, 1)
    assert abs(m12.trace() - 1.0) < 1e-12
    # iterated single-site traces agree
    assert np.allclose(partial_trace(partial_trace(rho, 1), 1).matrix, m12.matrix)
    with pytest.raises(IndexOutOfRange):
        partial_trace(m12, 1)  # cannot trace out every site


def test_partial_trace_linear():
    lay = QuditLayout(2, 2)
    x = random_traceless(lay, seed=0)
    y = random_traceless(lay, seed=1)
    lhs = partial_trace(x + 2.0 * y, 2).matrix
    rhs = partial_trace(x, 2).matrix + 2.0 * partial_trace(y, 2).matrix
    assert np.abs(lhs - rhs).max() < 1e-12


def test_embed_ordering():
    # site 1 is the most significant factor
    lay = QuditLayout(2, 2)
    z1 = embed_operator(HermitianOperator(QuditLayout(2, 1), SZ), lay, [1])
    assert np.allclose(z1.matrix, np.kron(SZ, np.eye(2)))
    z2 = embed_operator(HermitianOperator(QuditLayout(2, 1), SZ), lay, [2])
    assert np.allclose(z2.matrix, np.kron(np.eye(2), SZ))


def test_embed_noncontiguous():
    lay = QuditLayout(2, 3)
    two = HermitianOperator(QuditLayout(2, 2), np.kron(SX, SZ))
    got = embed_operator(two, lay, [1, 3])
    want = np.kron(SX, np.kron(np.eye(2), SZ))
    assert np.abs(got.matrix - want).max() < 1e-12
    # reversed support order permutes the factors
    got_rev = embed_operator(two, lay, [3, 1])
    want_rev = np.kron(SZ, np.kron(np.eye(2), SX))
    assert np.abs(got_rev.matrix - want_rev).max() < 1e-12


def test_permute_sites():
    a = random_density(QuditLayout(2, 1), seed=10)
    b = random_density(QuditLayout(2, 1), seed=11)
    ab = tensor_product(a, b)
    ba = permute_sites(ab, [2, 1])
    assert np.allclose(ba.matrix, tensor_product(b, a).matrix)
    assert np.allclose(permute_sites(ba, [2, 1]).matrix, ab.matrix)


def test_basis_state_digits():
    lay = QuditLayout(2, 2)
    s = basis_state(lay, [1, 0])
    m = np.zeros((4, 4))
    m[2, 2] = 1.0  # |10> is index 2 with site 1 most significant
    assert np.allclose(s.matrix, m)
    with pytest.raises(IndexOutOfRange):
        basis_state(lay, [2, 0])
    with pytest.raises(DimensionMismatch):
        basis_state(lay, [0])


def test_trace_norm_values():
    gam = maximally_entangled(2)
    mix = maximally_mixed(QuditLayout(2, 2))
    assert abs(trace_norm(gam.matrix - mix.matrix) - 1.5) < 1e-12
    assert abs(operator_norm(gam.matrix - mix.matrix) - 0.75) < 1e-12
    x = random_traceless(QuditLayout(2, 2), seed=4)
    assert operator_norm(x.matrix) <= trace_norm(x.matrix) + 1e-12
    assert trace_norm(x.matrix) <= 4 * operator_norm(x.matrix) + 1e-12


def test_entropies():
    rho = DensityMatrix(QuditLayout(2, 1), np.diag([0.25, 0.75]))
    assert abs(von_neumann_entropy(rho) - 0.5623351446188083) < 1e-12
    pure = basis_state(QuditLayout(2, 1), [0])
    assert von_neumann_entropy(pure) == pytest.approx(0.0, abs=1e-12)
    gam = maximally_entangled(2)
    mix = maximally_mixed(QuditLayout(2, 2))
    assert abs(relative_entropy(gam, mix) - 2 * math.log(2)) < 1e-10
    # support violation -> +inf
    assert math.isinf(relative_entropy(mix, gam))


def test_dephase_and_replace():
    lay = QuditLayout(2, 1)
    x = HermitianOperator(lay, SX)
    assert np.abs(dephase(x).matrix).max() < 1e-12
    rho = random_density(QuditLayout(2, 2), seed=5)
    e1 = replace_with_maximally_mixed(rho, 1)
    assert abs(e1.trace() - 1.0) < 1e-12
    assert np.allclose(partial_trace(e1, 2).matrix, np.eye(2) / 2)
    one = random_density(lay, seed=6)
    assert np.allclose(replace_with_maximally_mixed(one, 1).matrix, np.eye(2) / 2)


def test_random_generators_deterministic():
    lay = QuditLayout(2, 2)
    assert np.array_equal(random_density(lay, seed=9).matrix,
                          random_density(lay, seed=9).matrix)
    assert np.array_equal(random_traceless(lay, seed=9).matrix,
                          random_traceless(lay, seed=9).matrix)
    assert np.array_equal(haar_unitary(4, seed=9), haar_unitary(4, seed=9))
    u = haar_unitary(4, seed=9)
    assert np.abs(u @ u.conj().T - np.eye(4)).max() < 1e-12
    pure = random_density(lay, rank=1, seed=12)
    assert von_neumann_entropy(pure) < 1e-9
    assert abs(random_traceless(lay, seed=13).trace()) < 1e-12


def test_random_density_mean():
    lay = QuditLayout(2, 1)
    rng = np.random.default_rng(1)
    acc = np.zeros((2, 2), dtype=complex)
    for _ in range(10_000):
        acc += random_density(lay, seed=rng).matrix
    assert np.abs(acc / 10_000 - np.eye(2) / 2).max() < 5e-2


def test_unitary_basis_orthogonality():
    for d in (2, 3):
        ub = UnitaryBasis(d)
        assert len(ub) == d * d
        assert np.allclose(ub.element(0), np.eye(d))
        for a in range(d * d):
            ua = ub.element(a)
            assert np.abs(ua @ ua.conj().T - np.eye(d)).max() < 1e-10
            for b in range(d * d):
                ip = np.trace(ua.conj().T @ ub.element(b)) / d
                assert abs(ip - (1.0 if a == b else 0.0)) < 1e-10


def test_json_roundtrip(tmp_path):
    rho = random_density(QuditLayout(2, 2), seed=20)
    payload = operator_to_json(rho)
    back = operator_from_json(payload, as_state=True)
    assert isinstance(back, DensityMatrix)
    assert np.abs(back.matrix - rho.matrix).max() < 1e-15
    path = tmp_path / "rho.json"
    save_operator(path, rho)
    again = load_operator(path, as_state=True)
    assert np.abs(again.matrix - rho.matrix).max() < 1e-15


def test_json_rejects_malformed():
    with pytest.raises(InvalidInput):
        operator_from_json({"d": 2, "n": 1})
    with pytest.raises(InvalidInput):
        matrix_from_json([[[0.0], [0.0]]])
    bad = {"d": 2, "n": 1, "matrix": [[[0.0, 0.0]], [[0.0, 0.0]]]}
    with pytest.raises(InvalidInput):
        operator_from_json(bad)
    ok = matrix_to_json(np.eye(2))
    assert json.loads(json.dumps(ok)) == ok
