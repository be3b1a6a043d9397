"""Shared hypothesis strategies."""

import numpy as np
from hypothesis import strategies as st

reals = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, reals, reals)


@st.composite
def disc_points(draw, rmax=0.9):
    r = draw(st.floats(0.0, rmax))
    t = draw(st.floats(0.0, 2 * np.pi))
    return complex(r * np.cos(t), r * np.sin(t))


def coeff_arrays(degree):
    return st.lists(complexes, min_size=degree + 1, max_size=degree + 1).map(
        lambda xs: np.array(xs, dtype=complex)
    )


@st.composite
def zero_lists(draw, max_n=4, rmax=0.8, origin=True):
    zs = draw(st.lists(disc_points(rmax), min_size=0 if origin else 1, max_size=max_n - 1 if origin else max_n))
    return ([0j] if origin else []) + zs
