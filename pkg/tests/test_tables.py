import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causallab.errors import UndefinedConditionalError, ValidationError
from causallab.tables import (
    ConditionalTable,
    JointTable,
    SimplexVector,
    compose,
    conditional,
    marginal_x,
    marginal_y,
    mutual_information,
    outer,
    transpose,
)

T22 = JointTable([[0.1, 0.4], [0.2, 0.3]])


def test_simplex_validation():
    SimplexVector([0.25, 0.75])
    with pytest.raises(ValidationError):
        SimplexVector([1.0])  # too short
    with pytest.raises(ValidationError):
        SimplexVector([0.6, 0.6])  # mass
    with pytest.raises(ValidationError):
        SimplexVector([-0.1, 1.1])  # negative
    with pytest.raises(ValidationError):
        SimplexVector([np.nan, 1.0])


def test_joint_validation():
    with pytest.raises(ValidationError):
        JointTable([[0.5, 0.6], [0.1, 0.1]])
    with pytest.raises(ValidationError):
        JointTable([[0.5, -0.1], [0.3, 0.3]])


def test_values_are_readonly():
    v = SimplexVector([0.5, 0.5])
    with pytest.raises(ValueError):
        v.values[0] = 0.9


def test_marginals():
    assert np.allclose(marginal_x(T22).values, [0.5, 0.5])
    assert np.allclose(marginal_y(T22).values, [0.3, 0.7])
    u = JointTable.uniform(2, 2)
    assert np.allclose(marginal_x(u).values, [0.5, 0.5])
    assert np.allclose(marginal_y(u).values, [0.5, 0.5])


def test_rank_one_marginals():
    j = outer(SimplexVector([0.2, 0.8]), SimplexVector([0.6, 0.4]))
    assert np.allclose(marginal_x(j).values, [0.2, 0.8])
    assert np.allclose(marginal_y(j).values, [0.6, 0.4])
    assert mutual_information(j) == pytest.approx(0.0, abs=1e-12)


def test_conditional_matches_hand_computation():
    # joint (d, e, f) = (0.1, 0.4, 0.2): P(Y|X) rows (0.2, 0.8) and (0.4, 0.6)
    c = conditional(T22, "x")
    assert np.allclose(c.rows, [[0.2, 0.8], [0.4, 0.6]])


def test_conditional_of_independent_table_repeats_marginal():
    q = SimplexVector([0.6, 0.3, 0.1])
    j = outer(SimplexVector([0.2, 0.8]), q)
    c = conditional(j, "x")
    assert np.allclose(c.rows, np.tile(q.values, (2, 1)))


def test_conditional_zero_marginal_errors_without_clamp():
    j = JointTable([[0.0, 0.0], [0.5, 0.5]])
    with pytest.raises(UndefinedConditionalError):
        conditional(j, "x")
    clamped = conditional(j, "x", clamp=True)
    assert np.allclose(clamped.rows.sum(axis=1), 1.0)


def test_compose_forward_map():
    # a = 0.5, rows (b, 1-b) = (0.2, 0.8), (c, 1-c) = (0.4, 0.6)
    j = compose(SimplexVector([0.5, 0.5]), ConditionalTable([[0.2, 0.8], [0.4, 0.6]]))
    assert np.allclose(j.entries, [[0.1, 0.4], [0.2, 0.3]])


def test_compose_deterministic_rows():
    rows = np.eye(3)
    rows = np.where(rows == 1, 1.0, 0.0)
    j = compose(SimplexVector.uniform(3), ConditionalTable(rows))
    assert np.allclose(np.diag(j.entries), 1.0 / 3)
    assert j.entries.sum() == pytest.approx(1.0)


def test_compose_preserves_marginal():
    m = SimplexVector([0.3, 0.7])
    c = ConditionalTable([[0.25, 0.75], [0.9, 0.1]])
    assert np.allclose(marginal_x(compose(m, c)).values, m.values)


def test_transpose():
    assert np.allclose(transpose(T22).entries, [[0.1, 0.2], [0.4, 0.3]])
    sym = JointTable([[0.2, 0.3], [0.3, 0.2]])
    assert transpose(sym) == sym
    assert transpose(transpose(T22)) == T22


@st.composite
def positive_joints(draw, k_min=2, k_max=4):
    kx = draw(st.integers(k_min, k_max))
    ky = draw(st.integers(k_min, k_max))
    raw = draw(
        st.lists(
            st.floats(0.05, 1.0, allow_nan=False), min_size=kx * ky, max_size=kx * ky
        )
    )
    arr = np.array(raw).reshape(kx, ky)
    return JointTable(arr / arr.sum())


@given(positive_joints())
@settings(max_examples=60, deadline=None)
def test_factorization_round_trip(joint):
    rebuilt = compose(marginal_x(joint), conditional(joint, "x"))
    assert np.allclose(rebuilt.entries, joint.entries, atol=1e-12, rtol=0)


@given(positive_joints())
@settings(max_examples=60, deadline=None)
def test_conditional_after_compose_recovers_rows(joint):
    m = marginal_x(joint)
    c = conditional(joint, "x")
    again = conditional(compose(m, c), "x")
    assert np.allclose(again.rows, c.rows, atol=1e-12, rtol=0)


def test_conditional_given_y_orientation():
    c = conditional(T22, "y")
    # P(X|Y=0) = (0.1, 0.2)/0.3
    assert np.allclose(c.rows[0], [1 / 3, 2 / 3])
    assert c.k_given == 2 and c.k_target == 2


def test_conditional_table_from_simplex_rows():
    rows = [SimplexVector([0.2, 0.8]), SimplexVector([0.7, 0.3])]
    c = ConditionalTable(rows)
    assert c.row(1) == rows[1]
