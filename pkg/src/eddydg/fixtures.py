"""Built-in meshes used by tests, benchmarks and the CLI.

The box families are Kuhn subdivisions (six tetrahedra per cube, all
sharing the main diagonal) of a structured grid on the unit cube, so
refining the grid keeps every cell shape-similar.  Conducting regions
are aligned with cube boundaries at each admissible resolution:

    boxed_cube(n)   conductor (1/3, 2/3)^3, n a multiple of 3
    boxed_torus(n)  square ring around the z-axis column, n a multiple
                    of 5: max(|x-.5|, |y-.5|) in (0.1, 0.3), |z-.5| < 0.1
"""

import itertools

import numpy as np

from .mesh import Mesh

__all__ = ["boxed_cube", "boxed_torus", "fixture", "insulator_cube", "two_tet"]

_PERMUTATIONS = sorted(itertools.permutations(range(3)))


def _kuhn_box(n, is_conductor):
    """Kuhn-subdivided n^3 grid; region decided by the cube-center test."""
    side = n + 1
    grid = np.arange(side) / n
    vid = lambda i, j, k: (i * side + j) * side + k
    vertices = np.array(
        [(grid[i], grid[j], grid[k]) for i in range(side) for j in range(side) for k in range(side)]
    )
    cells, regions, materials = [], [], []
    e = np.eye(3, dtype=int)
    for i, j, k in itertools.product(range(n), repeat=3):
        center = (np.array([i, j, k]) + 0.5) / n
        conductor = bool(is_conductor(center))
        for perm in _PERMUTATIONS:
            corner = np.array([i, j, k])
            tet = [vid(*corner)]
            for axis in perm:
                corner = corner + e[axis]
                tet.append(vid(*corner))
            cells.append(tet)
            regions.append(0 if conductor else 1)
            materials.append("conductor" if conductor else "insulator")
    return Mesh(vertices, cells, regions, materials)


def boxed_cube(n):
    """Conducting cube (1/3, 2/3)^3 inside the unit box, grid size n."""
    if n % 3 or n <= 0:
        raise ValueError("boxed_cube needs a positive multiple of 3")
    return _kuhn_box(n, lambda c: np.all((c > 1.0 / 3.0) & (c < 2.0 / 3.0)))


def boxed_torus(n):
    """Conducting square ring around a central insulating column.

    The insulating complement has one independent loop (through the
    hole), so the cohomology space is one-dimensional.
    """
    if n % 5 or n <= 0:
        raise ValueError("boxed_torus needs a positive multiple of 5")

    def inside(c):
        radial = max(abs(c[0] - 0.5), abs(c[1] - 0.5))
        return 0.1 < radial < 0.3 and abs(c[2] - 0.5) < 0.1

    return _kuhn_box(n, inside)


def insulator_cube():
    """Unit cube, six cells, no conductor."""
    return _kuhn_box(1, lambda c: False)


def two_tet():
    """Two tetrahedra sharing one interface triangle.

    The conducting cell touches the domain boundary, which is a
    topology warning; the fixture exists to exercise exactly that and
    the hand-countable classification.
    """
    vertices = np.array(
        [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.25, 0.25, -1.0],
        ]
    )
    cells = [(0, 1, 2, 3), (0, 1, 2, 4)]
    return Mesh(vertices, cells, (1, 0), ("insulator", "conductor"), strict=False)


_FAMILIES = {
    "boxed_cube": boxed_cube,
    "boxed_torus": boxed_torus,
}
_SINGLETONS = {
    "two_tet": two_tet,
    "cube6": insulator_cube,
}


def fixture(spec):
    """Build a fixture from a name like ``two_tet`` or ``boxed_torus:5``."""
    name, _, arg = spec.partition(":")
    if name in _SINGLETONS:
        if arg:
            raise ValueError(f"fixture {name!r} takes no size argument")
        return _SINGLETONS[name]()
    if name in _FAMILIES:
        if not arg:
            raise ValueError(f"fixture {name!r} needs a grid size, e.g. {name}:6")
        return _FAMILIES[name](int(arg))
    known = sorted(_SINGLETONS) + sorted(f"{k}:n" for k in _FAMILIES)
    raise ValueError(f"unknown fixture {spec!r}; known: {', '.join(known)}")
