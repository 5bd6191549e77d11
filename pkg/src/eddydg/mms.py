"""Manufactured exact triples for solver verification.

Each entry supplies an exact conducting field h, an insulating scalar
psi (possibly multivalued through the cohomology potential) and an
amplitude k, together with the analytic residual data the generalized
load assembly consumes.  Construction verifies the interface
transmission conditions

    h x n = (grad psi + k rho) x n      (tangential)
    mu h . n = mu0 (grad psi + k rho) . n    (normal)

numerically at interface quadrature points and rejects candidates that
violate them.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import cell_coefficients
from .fespace import elementwise_interpolate
from .mesh import FaceKind
from .quadrature import rule_triangle

__all__ = [
    "ExactSolution",
    "ManufacturedSolutionError",
    "interpolate_exact",
    "manufactured_solution",
    "verify_transmission",
]

CATALOG = (
    "zero",
    "gradient_pair",
    "polynomial_pair",
    "cohomology_pair",
    "cohomology_poly",
)


class ManufacturedSolutionError(ValueError):
    """Raised when a candidate triple violates the model's conditions."""


@dataclass
class ExactSolution:
    """Exact triple with cell-aware callbacks ``(cell, points) -> values``.

    All callbacks receive the cell index so multivalued scalars can be
    evaluated on the correct branch; smooth entries simply ignore it.
    """

    name: str
    k_star: complex
    h: Callable  # conducting field, (n, 3)
    curl_h: Callable  # its curl, (n, 3)
    psi: Callable  # insulating scalar, (n,)
    grad_psi: Callable  # its elementwise gradient, (n, 3)
    w_field: Callable  # grad psi + k rho, (n, 3)
    e_field: Callable  # sigma^-1 (curl h - j), (n, 3)
    f_c: Callable  # conducting volume residual, (n, 3)
    f_i: Callable  # insulating volume residual, (n,)
    satisfies_sigma: bool
    polynomial_degree: Optional[int] = None
    j: Optional[Callable] = None
    meta: dict = field(default_factory=dict)


def manufactured_solution(name, space, materials, *, amplitude=1.0):
    """Build and verify a catalog entry on the given space."""
    if name not in CATALOG:
        raise ManufacturedSolutionError(
            f"unknown manufactured solution {name!r}; catalog: {CATALOG}"
        )
    mu, _ = cell_coefficients(space, materials)

    if name == "zero":
        zero3 = lambda cell, pts: np.zeros((len(np.atleast_2d(pts)), 3), complex)
        zero1 = lambda cell, pts: np.zeros(len(np.atleast_2d(pts)), complex)
        return ExactSolution(
            name, 0.0, zero3, zero3, zero1, zero3, zero3, zero3, zero3, zero1, True
        )

    if name in ("cohomology_pair", "cohomology_poly") and space.harmonic is None:
        raise ManufacturedSolutionError(
            f"{name} needs a space with cohomology data"
        )

    if name in ("gradient_pair", "cohomology_pair"):
        # the cohomology entry doubles the frequency so the amplitude
        # error stays resolvable above the linear solver's noise floor
        cycles = 2 if name == "cohomology_pair" else 1
        chi, grad_chi, lap_chi = _trig_potential(amplitude, cycles)
        poly_deg = None
    else:
        chi, grad_chi, lap_chi = _poly_potential(space.degree, amplitude)
        poly_deg = space.degree

    k_star = 0.8 - 0.6j if name.startswith("cohomology") else 0.0
    exact = _gradient_like(name, space, materials, mu, chi, grad_chi, lap_chi, k_star)
    exact.polynomial_degree = poly_deg
    exact.satisfies_sigma = name in ("gradient_pair", "cohomology_pair")
    exact.meta["potential"] = chi  # generating scalar, used by interpolation tests
    verify_transmission(exact, space, materials)
    return exact


def _trig_potential(amp, cycles=1):
    pi = cycles * np.pi

    def chi(pts):
        p = np.atleast_2d(pts)
        return amp * np.sin(pi * p[:, 0]) * np.sin(pi * p[:, 1]) * np.sin(pi * p[:, 2])

    def grad_chi(pts):
        p = np.atleast_2d(pts)
        sx, cx = np.sin(pi * p[:, 0]), np.cos(pi * p[:, 0])
        sy, cy = np.sin(pi * p[:, 1]), np.cos(pi * p[:, 1])
        sz, cz = np.sin(pi * p[:, 2]), np.cos(pi * p[:, 2])
        return amp * pi * np.stack([cx * sy * sz, sx * cy * sz, sx * sy * cz], axis=1)

    def lap_chi(pts):
        return -3.0 * np.pi**2 * chi(pts)

    return chi, grad_chi, lap_chi


def _poly_potential(degree, amp):
    a = np.array([1.0, 0.5, -0.25])
    shift = 0.3

    def base(pts):
        p = np.atleast_2d(pts)
        return p @ a + shift

    def chi(pts):
        return amp * base(pts) ** degree

    def grad_chi(pts):
        s = base(pts)
        return amp * degree * (s ** (degree - 1))[:, None] * a[None, :]

    def lap_chi(pts):
        s = base(pts)
        if degree < 2:
            return np.zeros_like(s)
        return amp * degree * (degree - 1) * (s ** (degree - 2)) * float(a @ a)

    return chi, grad_chi, lap_chi


def _gradient_like(name, space, materials, mu, chi, grad_chi, lap_chi, k_star):
    """Triple h = grad chi, psi = chi - k theta, k = k_star.

    The insulating flux w = grad psi + k rho equals grad chi for any
    k_star because the multivalued potential contributes k (rho - rho).
    """
    omega, mu0 = materials.omega, materials.mu0
    harmonic = space.harmonic
    mesh = space.mesh

    def theta_cell(cell, pts):
        v0 = mesh.vertices[mesh.cells[cell, 0]]
        base = harmonic.theta[cell, 0]
        return base + (np.atleast_2d(pts) - v0) @ harmonic.rho[cell]

    def h(cell, pts):
        return grad_chi(pts).astype(complex)

    def curl_h(cell, pts):
        return np.zeros((len(np.atleast_2d(pts)), 3), complex)

    if k_star:

        def psi(cell, pts):
            return chi(pts) - k_star * theta_cell(cell, pts)

        def grad_psi(cell, pts):
            return grad_chi(pts) - k_star * harmonic.rho[cell]

    else:

        def psi(cell, pts):
            return chi(pts).astype(complex)

        def grad_psi(cell, pts):
            return grad_chi(pts).astype(complex)

    def w_field(cell, pts):
        return grad_chi(pts).astype(complex)

    def e_field(cell, pts):
        return np.zeros((len(np.atleast_2d(pts)), 3), complex)

    def f_c(cell, pts):
        return 1j * materials.omega * mu[cell] * grad_chi(pts)

    def f_i(cell, pts):
        return -1j * omega * mu0 * lap_chi(pts).astype(complex)

    return ExactSolution(
        name, k_star, h, curl_h, psi, grad_psi, w_field, e_field, f_c, f_i, True
    )


def verify_transmission(exact, space, materials, *, tol=1e-9):
    """Check the interface transmission conditions at quadrature points."""
    mesh = space.mesh
    mu, _ = cell_coefficients(space, materials)
    mu0 = materials.mu0
    rule = rule_triangle(2 * space.degree + 2)
    worst_t, worst_n, scale = 0.0, 0.0, 1.0
    for f in mesh.faces_of_kind(FaceKind.INTERFACE):
        own, nb = map(int, mesh.face_cells[f])
        n = mesh.face_normal[f]
        pts = rule.barycentric @ mesh.vertices[mesh.faces[f]]
        hv = np.asarray(exact.h(own, pts))
        wv = np.asarray(exact.w_field(nb, pts))
        scale = max(scale, np.abs(hv).max(), np.abs(wv).max())
        worst_t = max(worst_t, np.abs(np.cross(hv - wv, n)).max())
        worst_n = max(worst_n, np.abs(mu[own] * hv @ n - mu0 * wv @ n).max())
    if worst_t > tol * scale:
        raise ManufacturedSolutionError(
            f"{exact.name}: tangential transmission violated "
            f"({worst_t:.3e} > {tol:.1e} * {scale:.3e})"
        )
    if worst_n > tol * scale:
        raise ManufacturedSolutionError(
            f"{exact.name}: normal transmission violated "
            f"({worst_n:.3e} > {tol:.1e} * {scale:.3e}); "
            "the permeabilities must match the exact fluxes"
        )
    return worst_t, worst_n


def interpolate_exact(space, exact):
    """Elementwise nodal interpolant of the exact triple."""
    return elementwise_interpolate(
        space, conductor=exact.h, insulator=exact.psi, k=exact.k_star
    )
