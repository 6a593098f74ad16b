import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from opseq.hermitian import HermitianMatrix

_entries = st.floats(-10, 10, allow_nan=False, allow_infinity=False, allow_subnormal=False)


@st.composite
def complex_matrices(draw, min_dim=1, max_dim=6, dim=None):
    n = dim if dim is not None else draw(st.integers(min_dim, max_dim))
    re = draw(arrays(np.float64, (n, n), elements=_entries))
    im = draw(arrays(np.float64, (n, n), elements=_entries))
    return re + 1j * im


@st.composite
def hermitian_matrices(draw, min_dim=1, max_dim=6, dim=None):
    return HermitianMatrix(draw(complex_matrices(min_dim, max_dim, dim)))


@st.composite
def psd_matrices(draw, min_dim=1, max_dim=6, dim=None):
    g = draw(complex_matrices(min_dim, max_dim, dim))
    return HermitianMatrix(g.conj().T @ g)


@st.composite
def psd_pairs(draw, max_dim=6):
    n = draw(st.integers(1, max_dim))
    return draw(psd_matrices(dim=n)), draw(psd_matrices(dim=n))


@st.composite
def hermitian_pairs(draw, max_dim=6):
    n = draw(st.integers(1, max_dim))
    return draw(hermitian_matrices(dim=n)), draw(hermitian_matrices(dim=n))
