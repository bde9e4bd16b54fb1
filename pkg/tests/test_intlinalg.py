from hypothesis import assume, given
from hypothesis import strategies as st
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form

from valring import intlinalg as la

entries = st.integers(min_value=-6, max_value=6)


def square(n):
    return st.lists(st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n)


def rect(rows, cols):
    return st.lists(st.lists(entries, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


def test_smith_examples():
    assert la.smith_invariants([[2, 0], [0, 3]]) == [1, 6]
    assert la.smith_invariants([[2, 1], [0, 1]]) == [1, 2]
    assert la.smith_invariants([[1, 0], [0, 1]]) == [1, 1]


@given(st.integers(min_value=1, max_value=4).flatmap(square))
def test_smith_matches_sympy(m):
    assume(Matrix(m).det() != 0)
    ours = la.smith_invariants(m)
    snf = smith_normal_form(Matrix(m), domain=ZZ)
    theirs = [abs(int(snf[i, i])) for i in range(len(m))]
    assert ours == theirs


@given(st.integers(min_value=1, max_value=4).flatmap(square))
def test_determinant_matches_sympy(m):
    assert la.det(m) == Matrix(m).det()


@given(st.integers(min_value=1, max_value=4).flatmap(square))
def test_smith_product_is_determinant(m):
    d = abs(la.int_det(m))
    assume(d)
    prod = 1
    for f in la.smith_invariants(m):
        prod *= f
    assert prod == d


@given(st.tuples(st.integers(1, 4), st.integers(1, 4)).flatmap(lambda rc: rect(*rc)))
def test_hermite_transform(m):
    h, u = la.hermite_rows(m)
    assert abs(la.int_det(u)) == 1
    assert la.matmul(u, m) == h
    assert la.rank(h) == Matrix(m).rank()


@given(st.tuples(st.integers(1, 4), st.integers(1, 3)).flatmap(lambda rc: rect(*rc)))
def test_left_kernel(m):
    ker = la.left_kernel(m)
    assert len(ker) == len(m) - Matrix(m).rank()
    for x in ker:
        assert all(v == 0 for v in la.vecmat(x, m))
    if ker:
        # saturated: the kernel basis spans a primitive sublattice
        assert la.smith_invariants(la.transpose(ker))[: len(ker)] == [1] * len(ker)


@given(st.integers(1, 4).flatmap(square))
def test_adjugate(m):
    d = la.int_det(m)
    assume(d)
    adj = la.adjugate(m)
    assert la.matmul(m, adj) == [[d * (i == j) for j in range(len(m))] for i in range(len(m))]
    assert adj == [[int(x) for x in r] for r in Matrix(m).adjugate().tolist()]
