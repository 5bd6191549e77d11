"""Direct solution of the assembled system with a residual certificate."""

import os
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres, splu

from .assembly import cell_coefficients
from .fespace import _eval_monomials, _exponents
from .quadrature import rule_tet

__all__ = ["Solution", "SolverError", "electric_field", "factorized_solver", "solve_system"]

# sparse LU fill on 3D meshes: ~40x the matrix nnz at 2e4 unknowns and
# growing with size; deliberately conservative so the memory check errs
# toward the single-precision fallback
def _fill_estimate(n):
    return 40.0 * max(1.0, n / 2e4) ** 0.6


class SolverError(RuntimeError):
    """Raised when the linear solve cannot be certified."""


@dataclass
class Solution:
    """Coefficient vector with its backward-error certificate."""

    x: np.ndarray
    residual_inf: float
    certificate_bound: float
    precision: str = "double"

    @property
    def certified(self):
        return self.residual_inf <= self.certificate_bound


def _pick_precision(A):
    """Choose the factorization precision from the memory budget.

    A double-precision factor costs about 20 bytes per fill entry; when
    the estimate crowds the available physical memory the factorization
    is run in single precision instead and the accuracy is recovered by
    iterative refinement in double.
    """
    try:
        avail = os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError):
        return "double"
    estimate = _fill_estimate(A.shape[0]) * A.nnz * 20
    return "single" if estimate > 0.5 * avail else "double"


def _lu_closure(A, single):
    if single:
        # the blocks carry very different physical scales; symmetric
        # Jacobi scaling cuts the condition number before the lossy cast
        d = np.abs(A.diagonal())
        s = 1.0 / np.sqrt(np.where(np.isfinite(d) & (d > 0.0), d, 1.0))
        scaled = (A.multiply(s[:, None]).multiply(s[None, :])).tocsc()
        try:
            lu = splu(scaled.astype(np.complex64))
        except (RuntimeError, MemoryError) as exc:
            raise SolverError(f"factorization failed: {exc}") from exc
        return lambda r: s * lu.solve((s * r).astype(np.complex64)).astype(np.complex128)
    try:
        lu = splu(A)
    except (RuntimeError, MemoryError) as exc:
        raise SolverError(f"factorization failed: {exc}") from exc
    return lu.solve


def _factorize(A, k_index, single):
    """Return an (approximate) solve closure for A.

    The topology amplitude couples to every insulator cell, so its row
    and column are dense and would wreck the sparse ordering.  They are
    removed by one step of block elimination (bordering): factor the
    leading block once, then each solve costs one substitution and a
    scalar Schur complement.
    """
    if k_index is None:
        return _lu_closure(A, single)
    n = A.shape[0]
    if k_index != n - 1:
        raise SolverError("amplitude dof must be the trailing unknown")
    lead = A[:k_index, :k_index].tocsc()
    col = A[:k_index, [k_index]].toarray().ravel()
    row = A[[k_index], :k_index].toarray().ravel()
    diag = A[k_index, k_index]
    base = _lu_closure(lead, single)
    z = base(col)
    schur = diag - row @ z
    if not np.isfinite(schur) or abs(schur) < 1e-300:
        raise SolverError("amplitude equation is numerically singular")

    def solve(rhs):
        y = base(rhs[:k_index])
        amp = (rhs[k_index] - row @ y) / schur
        return np.concatenate([y - amp * z, [amp]])

    return solve


def factorized_solver(system, *, rtol=1e-10, precision="auto"):
    """Factor the system once and return a certified solve for any load.

    The returned callable maps a right-hand side to a Solution whose
    residual satisfies

        ||A x - b||_inf <= rtol * (||A||_inf ||x||_inf + ||b||_inf)

    and raises SolverError otherwise.  Iterative refinement in double
    precision drives the residual under the bound; it converges in one
    or two sweeps for a double-precision factor and a handful for a
    single-precision one, with a GMRES fallback when the stationary
    iteration stalls.  A zero load short-circuits to the zero solution.

    Parameters
    ----------
    system : AssembledSystem
        Matrix and load produced by the assembler.
    rtol : float, optional
        Relative backward-error target of the certificate.
    precision : {"auto", "double", "single"}, optional
        Factorization precision.  The default estimates the factor
        memory and falls back to single precision when a double factor
        would crowd the physical memory of the machine.

    Returns
    -------
    callable
        ``solve(b) -> Solution`` sharing one factorization.
    """
    if precision not in ("auto", "double", "single"):
        raise ValueError(f"unknown precision {precision!r}")
    A = system.matrix.tocsc()
    if precision == "auto":
        precision = _pick_precision(A)
    solve = _factorize(A, system.space.k_index, precision == "single")
    norm_a = np.abs(A).sum(axis=1).max()

    def certified_solve(b):
        if not np.any(b):
            return Solution(np.zeros_like(b), 0.0, 0.0)
        b_inf = np.abs(b).max()
        x = solve(b)
        if not np.all(np.isfinite(x)):
            raise SolverError("factorization produced non-finite entries")
        # refine until progress stalls, not merely to the certificate,
        # so the forward error is the best the factor can deliver
        max_sweeps = 40 if precision == "single" else 4
        best_x, best_res, best_bound = x, np.inf, 0.0
        prev = np.inf
        for _ in range(max_sweeps):
            r = b - A @ x
            res = float(np.abs(r).max())
            if not np.isfinite(res):
                break
            scale = norm_a * np.abs(x).max() + b_inf
            if res < best_res:
                best_x, best_res, best_bound = x, res, rtol * scale
            # slow modes can contract at barely under 1x per sweep, so
            # only a near-unit ratio counts as a stall
            if res >= 0.9 * prev:
                break
            prev = res
            x = x + solve(r)
        if best_res > best_bound and precision == "single":
            # stationary refinement stalls once the factorization error
            # has a non-contracting mode; GMRES preconditioned by the
            # same factor minimizes the true residual and keeps going
            op = LinearOperator(A.shape, matvec=solve, dtype=np.complex128)
            y, _ = gmres(A, b, x0=best_x, M=op, rtol=1e-13, atol=0.0,
                         restart=40, maxiter=5)
            if np.all(np.isfinite(y)):
                r = b - A @ y
                res = float(np.abs(r).max())
                scale = norm_a * np.abs(y).max() + b_inf
                if res < best_res:
                    best_x, best_res, best_bound = y, res, rtol * scale
        if best_res <= best_bound:
            return Solution(best_x, best_res, float(best_bound), precision)
        raise SolverError(
            f"residual {best_res:.3e} exceeds certificate bound "
            f"{best_bound:.3e} ({precision} precision)"
        )

    return certified_solve


def solve_system(system, *, rtol=1e-10, precision="auto"):
    """Solve the assembled system for its load; see factorized_solver."""
    return factorized_solver(system, rtol=rtol, precision=precision)(system.rhs)


def electric_field(space, materials, x, source=None):
    """Scaled electric field sigma^-1 (curl_h u_h - P_{m-1} j).

    Returns a callable ``(cell, points) -> (n, 3)`` on conducting
    cells.  The impressed current is projected cellwise onto degree
    m - 1 polynomials before subtraction, so a curl-free discrete
    solution of a pure source problem yields the projected field.
    """
    mesh = space.mesh
    _, sigma = cell_coefficients(space, materials)
    exps = _exponents(3, space.degree - 1)
    proj = {}
    if source is not None:
        rule = rule_tet(2 * space.degree + 2)
        basis = _eval_monomials(exps, rule.points)  # (nq, nb)
        gram = basis.T @ (rule.weights[:, None] * basis)
        for c in map(int, mesh.conductor_cells):
            pts = space.from_reference(c, rule.points)
            js = np.asarray(source(c, pts), dtype=np.complex128)
            rhs = basis.T @ (rule.weights[:, None] * js)
            proj[c] = np.linalg.solve(gram, rhs)  # (nb, 3)

    def field(cell, points):
        cell = int(cell)
        pts = np.atleast_2d(points)
        ref = space.to_reference(cell, pts)
        grads = space.scalar.grad(ref) @ space.cell_jinv[cell]
        dofs = space.cell_dofs(cell)
        coeff = np.asarray(x)[dofs].reshape(-1, 3)  # (ns, comp)
        # curl of sum_s L_s(x) c_s with constant vectors c_s
        curl = np.einsum("nsv,sw->nvw", grads, coeff)
        curl = np.stack(
            [
                curl[:, 1, 2] - curl[:, 2, 1],
                curl[:, 2, 0] - curl[:, 0, 2],
                curl[:, 0, 1] - curl[:, 1, 0],
            ],
            axis=1,
        )
        if cell in proj:
            curl = curl - _eval_monomials(exps, ref) @ proj[cell]
        return curl / sigma[cell]

    return field
