import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccspkit import analysis as an
from ccspkit.ccsp import (CcspInstance, ccsp_operator, load_ccsp, make_ccsp,
                          verify_conservation, verify_solution)
from ccspkit.errors import ConfigurationError, NotNeutralError, SolutionRejected
from ccspkit.operators import identity, make_affine, make_operator
from ccspkit.protocols import IterationConfig, run_synchronous

from oracles import random_orthogonal_haar

ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


def scalar_instance():
    return make_ccsp([[1.0]], make_affine([[0.5]], [1.0]))


class TestMakeCcsp:
    def test_identity(self):
        inst = make_ccsp(np.eye(3), identity(3))
        c = np.array([1.0, -2.0, 0.5])
        assert verify_solution(inst, c, c).accepted

    def test_rotation(self):
        inst = make_ccsp(ROT90, make_affine(0.5 * np.eye(2)))
        assert inst.k == 2 and inst.orthogonality_deviation <= 1e-15

    def test_reject_diag(self):
        with pytest.raises(NotNeutralError) as err:
            make_ccsp(np.diag([1.0, 2.0]), identity(2))
        assert err.value.deviation == pytest.approx(3.0)

    def test_shape_errors(self):
        with pytest.raises(ConfigurationError):
            make_ccsp(np.ones((2, 3)), identity(2))
        with pytest.raises(ConfigurationError):
            make_ccsp(np.eye(3), identity(2))


class TestConservation:
    def test_orthogonal(self, rng):
        Q = random_orthogonal_haar(8, rng)
        inst = make_ccsp(Q, identity(8))
        assert verify_conservation(inst, 10**4, rng) <= 1e-12

    def test_scaled_matrix(self, rng):
        # built directly since construction would reject it
        inst = CcspInstance(k=3, G=1.01 * np.eye(3), m=identity(3))
        dev = verify_conservation(inst, 100, rng)
        assert dev == pytest.approx(1.01**2 - 1, rel=1e-10)

    def test_sign_flip(self):
        inst = make_ccsp([[-1.0]], identity(1))
        assert verify_conservation(inst, 100, np.random.default_rng(0)) == 0.0


class TestOperator:
    def test_identity(self, rng):
        T = ccsp_operator(make_ccsp(np.eye(4), identity(4)))
        v = rng.standard_normal(4)
        np.testing.assert_array_equal(T(v), v)

    def test_scalar(self):
        T = ccsp_operator(scalar_instance())
        assert T(np.array([2.0]))[0] == 2.0
        assert T(np.array([0.0]))[0] == 1.0

    def test_zero_map(self, rng):
        T = ccsp_operator(make_ccsp(ROT90, make_affine(np.zeros((2, 2)))))
        np.testing.assert_array_equal(T(rng.standard_normal(2)), np.zeros(2))

    def test_m_applied_after_g(self):
        m = make_operator(2, lambda d: d**2, batched=True)
        T = ccsp_operator(make_ccsp(ROT90, m))
        np.testing.assert_allclose(T(np.array([1.0, 2.0])), (ROT90 @ [1.0, 2.0]) ** 2)


class TestVerifySolution:
    def test_accept(self):
        sol = verify_solution(scalar_instance(), [2.0], [2.0])
        assert sol.accepted and sol.residual_pair == (0.0, 0.0)

    def test_reject(self):
        with pytest.raises(SolutionRejected) as err:
            verify_solution(scalar_instance(), [2.0], [3.0])
        assert err.value.solution.residual_pair[0] == pytest.approx(1.0)
        assert not err.value.solution.accepted

    def test_dims(self):
        with pytest.raises(ConfigurationError):
            verify_solution(scalar_instance(), [1.0, 2.0], [1.0])


def test_round_trip_scalar():
    inst = scalar_instance()
    T = ccsp_operator(inst)
    tr = run_synchronous(T, [0.0], IterationConfig(max_steps=200, residual_tol=1e-14))
    c = tr.final
    eps = an.residual(T, c)
    assert eps <= 1e-14
    sol = verify_solution(inst, c, inst.G @ c, tol=eps * (1 + 0.5) + 1e-300)
    assert sol.accepted


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.floats(0.0, 0.99))
def test_conic_inheritance(seed, k, a):
    g = np.random.default_rng(seed)
    Q = random_orthogonal_haar(k, g)
    m = make_affine(a * Q @ np.diag(g.uniform(0, 1, k)) @ Q.T, alpha=a)
    T = ccsp_operator(make_ccsp(random_orthogonal_haar(k, g), m))
    assert T.alpha is not None and T.alpha <= m.alpha * (1 + 1e-12)
    assert an.estimate_conic(T, g.standard_normal(k), 200, rng=g, exact=False).alpha_hat \
        <= m.alpha * (1 + 1e-9)


def test_load_ccsp(tmp_path):
    path = tmp_path / "G.txt"
    np.savetxt(path, ROT90)
    inst = load_ccsp(path, "scale", {"factor": 0.5})
    np.testing.assert_array_equal(inst.G, ROT90)
    T = ccsp_operator(inst)
    tr = run_synchronous(T, np.ones(2), IterationConfig(max_steps=200, residual_tol=1e-14))
    assert np.linalg.norm(tr.final) <= 1e-13


def test_load_ccsp_unknown_map(tmp_path):
    path = tmp_path / "G.txt"
    np.savetxt(path, np.eye(2))
    with pytest.raises(ConfigurationError):
        load_ccsp(path, "nope")
