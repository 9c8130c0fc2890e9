"""Instance generation, operators and file ingestion."""

import numpy as np
import pytest

import bigsam as bs
from bigsam.errors import ConfigurationError, MatrixParseError
from bigsam.problems import NOISE_PRESETS, load_matrix, save_matrix


def test_generator_determinism():
    a = bs.generate_rank_deficient_ls(8, 5, 3, 0.7, seed=12)
    b = bs.generate_rank_deficient_ls(8, 5, 3, 0.7, seed=12)
    assert np.array_equal(a.A, b.A)
    assert np.array_equal(a.b, b.b)


def test_generator_rank_and_consistency():
    inst = bs.generate_rank_deficient_ls(3, 2, 1, 0.5, seed=3)
    assert np.linalg.matrix_rank(inst.A) == 1
    # nullspace dimension = n - rank
    sv = np.linalg.svd(inst.A, compute_uv=False)
    assert np.sum(sv > 1e-12) == 1
    # zero noise: x_true is optimal with value exactly zero
    x_true = inst.metadata["x_true"]
    r = inst.A @ x_true - inst.b
    assert float(r @ r) <= 1e-18
    assert np.all(x_true >= 0)


def test_generator_full_rank_singleton():
    inst = bs.generate_rank_deficient_ls(6, 4, 3, 0.9, seed=1)
    with pytest.raises(ConfigurationError):
        bs.generate_rank_deficient_ls(6, 4, 4, 0.9, seed=1)  # rank == min(m, n)
    assert np.linalg.matrix_rank(inst.A) == 3


def test_lipschitz_constant_bounds_gradient_ratio():
    inst = bs.generate_rank_deficient_ls(10, 6, 4, 0.8, seed=8)
    f = inst.objective()
    rng = np.random.default_rng(4)
    for _ in range(1000):
        x = rng.standard_normal(6)
        y = rng.standard_normal(6)
        lhs = np.linalg.norm(f.gradient(x) - f.gradient(y))
        assert lhs <= f.lipschitz_grad * np.linalg.norm(x - y) + 1e-10


def test_add_noise_contract():
    inst = bs.generate_rank_deficient_ls(8, 5, 3, 0.7, seed=12)
    assert bs.add_noise(inst, 0.0, seed=1) is inst  # identity at rho = 0
    n1 = bs.add_noise(inst, 1e-2, seed=1)
    n2 = bs.add_noise(inst, 1e-2, seed=2)
    assert np.array_equal(n1.A, inst.A)  # matrix shared
    assert not np.array_equal(n1.b, n2.b)  # seeds differ
    assert np.array_equal(bs.add_noise(inst, 1e-2, seed=1).b, n1.b)  # deterministic
    assert n1.noise_sigma == 1e-2
    assert NOISE_PRESETS == (1e-1, 1e-2, 1e-3)


def test_first_difference_operator():
    op = bs.FirstDifferenceOperator(4)
    expected = np.array(
        [[1.0, -1.0, 0.0, 0.0], [0.0, 1.0, -1.0, 0.0], [0.0, 0.0, 1.0, -1.0]]
    )
    assert np.array_equal(op.matrix, expected)
    with pytest.raises(ConfigurationError):
        bs.FirstDifferenceOperator(1)


def test_quadratic_outer_from_operator_small():
    q = bs.quadratic_outer_from_operator(bs.FirstDifferenceOperator(2))
    assert np.array_equal(q.matrix, [[2.0, -1.0], [-1.0, 2.0]])
    # the Gram form is invariant to flipping the difference sign convention
    D = bs.FirstDifferenceOperator(2).matrix
    assert np.array_equal((-D).T @ (-D), D.T @ D)
    # eigenvalues from an independent computation
    eigs = np.linalg.eigvalsh(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    assert np.allclose(eigs, [1.0, 3.0])
    assert q.strong_convexity == pytest.approx(1.0)
    assert q.lipschitz_grad == pytest.approx(3.0)


def test_quadratic_outer_properties():
    q = bs.quadratic_outer_from_operator(bs.FirstDifferenceOperator(30))
    assert np.array_equal(q.matrix, q.matrix.T)  # symmetric to 0 ulps
    assert q.strong_convexity >= 1.0 - 1e-12  # Gram + identity
    rng = np.random.default_rng(14)
    for _ in range(1000):
        x = rng.standard_normal(30)
        rayleigh = (x @ (q.matrix @ x)) / (x @ x)
        assert q.strong_convexity - 1e-9 <= rayleigh <= q.lipschitz_grad + 1e-9
    # gradient is Qx, cross-checked by finite differences of the value
    x = rng.standard_normal(30)
    h = 1e-6
    fd = np.array(
        [
            (q.value(x + h * e) - q.value(x - h * e)) / (2 * h)
            for e in np.eye(30)
        ]
    )
    assert np.allclose(fd, q.gradient(x), atol=1e-5)


# --- file ingestion ---------------------------------------------------------


def test_matrixmarket_coordinate_identity(tmp_path):
    path = tmp_path / "eye.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real general\n"
        "% a comment line\n"
        "2 2 2\n"
        "1 1 1.0\n"
        "2 2 1.0\n"
    )
    assert np.array_equal(load_matrix(path), np.eye(2))


def test_matrixmarket_array_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    M = rng.standard_normal((3, 2))
    path = tmp_path / "m.mtx"
    save_matrix(path, M)
    assert np.array_equal(load_matrix(path), M)  # 17 digits round-trip bit-exactly


def test_matrixmarket_symmetric_coordinate(tmp_path):
    path = tmp_path / "sym.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real symmetric\n"
        "2 2 3\n"
        "1 1 2.0\n"
        "2 1 -1.0\n"
        "2 2 2.0\n"
    )
    assert np.array_equal(load_matrix(path), [[2.0, -1.0], [-1.0, 2.0]])


def test_csv_matrix(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n3,4\n")
    assert np.array_equal(load_matrix(path), [[1.0, 2.0], [3.0, 4.0]])


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(61)
    M = rng.standard_normal((4, 3)) * 1e3
    path = tmp_path / "m.csv"
    save_matrix(path, M)
    assert np.array_equal(load_matrix(path), M)


def test_truncated_matrixmarket_names_line(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real general\n"
        "3 3 4\n"
        "1 1 1.0\n"
        "2 2 1.0\n"
    )
    with pytest.raises(MatrixParseError) as err:
        load_matrix(path)
    assert "bad.mtx:4" in str(err.value)


def test_malformed_csv_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2\n3,oops\n")
    with pytest.raises(MatrixParseError) as err:
        load_matrix(path)
    assert "bad.csv:2" in str(err.value)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(MatrixParseError) as err:
        load_matrix(ragged)
    assert "ragged.csv:2" in str(err.value)


def test_instance_from_files(tmp_path):
    inst = bs.generate_rank_deficient_ls(5, 3, 2, 0.8, seed=9)
    a_path = tmp_path / "A.mtx"
    b_path = tmp_path / "b.mtx"
    save_matrix(a_path, inst.A)
    save_matrix(b_path, inst.b.reshape(-1, 1))
    loaded = bs.instance_from_files(a_path, b_path)
    assert np.array_equal(loaded.A, inst.A)
    assert np.array_equal(loaded.b, inst.b)


def test_instance_from_files_dimension_mismatch(tmp_path):
    a_path = tmp_path / "A.csv"
    b_path = tmp_path / "b.csv"
    save_matrix(a_path, np.eye(3))
    save_matrix(b_path, np.ones((2, 1)))
    with pytest.raises(ConfigurationError) as err:
        bs.instance_from_files(a_path, b_path)
    assert "3 rows" in str(err.value)


def test_instances_are_immutable():
    inst = bs.generate_rank_deficient_ls(5, 3, 2, 0.8, seed=9)
    with pytest.raises(ValueError):
        inst.A[0, 0] = 99.0
    with pytest.raises(ValueError):
        inst.b[0] = 99.0
