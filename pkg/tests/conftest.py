import numpy as np
import pytest

from partcomplete import kernels
from partcomplete.geometry import TriMesh
from partcomplete.primitives import box_mesh, icosphere

BACKENDS = ["python"] if kernels.BACKEND == "python" else ["native", "python"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def unit_cube() -> TriMesh:
    return box_mesh((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


@pytest.fixture
def sphere() -> TriMesh:
    return icosphere(3, radius=0.8)


def random_soup(rng: np.random.Generator, n_verts=40, n_faces=80) -> TriMesh:
    """Random triangle soup with valid (distinct-index) faces."""
    v = rng.normal(size=(n_verts, 3))
    f = rng.integers(0, n_verts, size=(n_faces * 2, 3))
    ok = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2])
    f = f[ok][:n_faces]
    return TriMesh(v, f)
