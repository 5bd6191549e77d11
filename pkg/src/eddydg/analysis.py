"""Empirical verification measures: norms, spectra, errors, rates.

Everything here measures claims about the discrete forms rather than
assembling them: structural symmetry, the rotated coercivity quotient

    Re[(1 - i) x^H A x] >= 1/2 ||x||_DG^2,

boundedness in the star norm, discrete trace constants, mesh-size
errors against an exact triple, and observed convergence orders.
"""

import numpy as np

from .assembly import cell_coefficients, entity_tables, norm_component_matrices

__all__ = [
    "NormContext",
    "check_boundedness",
    "check_coercivity",
    "check_symmetry",
    "coercivity_report",
    "dg_error",
    "eoc",
    "trace_constant",
]

DG_PARTS = ("l2C", "curlC", "gradI", "jumpC", "jumpI", "jumpE")
STAR_PARTS = ("avgC", "avgI", "avgE")


class NormContext:
    """Precomputed sparse matrices of the DG and star norm parts."""

    def __init__(self, space, materials):
        self.space = space
        self.materials = materials
        self.components = norm_component_matrices(space, materials)
        self._dg_matrix = None

    def quadratic(self, name, x):
        """Real quadratic value x^H M_name x (nonnegative up to roundoff)."""
        return float(np.real(np.vdot(x, self.components[name] @ x)))

    def dg_norm(self, x):
        return np.sqrt(max(sum(self.quadratic(p, x) for p in DG_PARTS), 0.0))

    def star_norm(self, x):
        parts = DG_PARTS + STAR_PARTS
        return np.sqrt(max(sum(self.quadratic(p, x) for p in parts), 0.0))

    def dg_matrix(self):
        if self._dg_matrix is None:
            m = self.components[DG_PARTS[0]].copy()
            for p in DG_PARTS[1:]:
                m = m + self.components[p]
            self._dg_matrix = m.tocsc()
        return self._dg_matrix


def _complex_samples(rng, n, count):
    for _ in range(count):
        yield rng.standard_normal(n) + 1j * rng.standard_normal(n)


def check_symmetry(system, *, nsamples=100, seed=20260814):
    """Largest |x^T A y - y^T A x| / max(|x^T A y|, 1) over random pairs."""
    A = system.matrix
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    worst = 0.0
    for _ in range(nsamples):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lhs = x @ (A @ y)
        rhs = y @ (A @ x)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1.0))
    return worst


def check_coercivity(system, norms, *, nsamples=100, seed=20260814):
    """Smallest rotated coercivity quotient over random complex vectors.

    Returns min over samples of Re[(1 - i) x^H A x] / ||x||_DG^2; the
    forms satisfy a lower bound of 1/2 with the default penalties.
    """
    A = system.matrix
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    worst = np.inf
    for x in _complex_samples(rng, n, nsamples):
        num = np.real((1.0 - 1.0j) * np.vdot(x, A @ x))
        den = sum(norms.quadratic(p, x) for p in DG_PARTS)
        worst = min(worst, num / den)
    return worst


def coercivity_report(system, norms, *, nsamples=100, seed=20260814, bound=0.5, slack=1e-9):
    """Classify the sampled coercivity quotient against its lower bound.

    Returns a dict with the minimum quotient and a ``passed`` flag; an
    undersized penalty shows up as ``passed = False`` (a calibration
    failure) rather than an exception.
    """
    value = check_coercivity(system, norms, nsamples=nsamples, seed=seed)
    return {
        "min_quotient": float(value),
        "bound": bound,
        "passed": bool(np.isfinite(value) and value >= bound - slack),
    }


def check_boundedness(system, norms, *, nsamples=100, seed=20260814):
    """Largest sampled |y^H A x| / (||x||_star ||y||_DG)."""
    A = system.matrix
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    worst = 0.0
    for _ in range(nsamples):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        val = abs(np.vdot(y, A @ x))
        worst = max(worst, val / (norms.star_norm(x) * norms.dg_norm(y)))
    return worst


def trace_constant(space):
    """Empirical constant of the discrete trace inequality.

    Largest over cells of h_K * lambda_max(B_K, V_K) where B_K and V_K
    are the boundary and volume mass matrices of the degree-m scalar
    element on the physical cell, so that

        h_K ||v||^2_{0, boundary K} <= C ||v||^2_{0, K}

    holds with C the returned value.  Affine shape-similarity makes it
    mesh-size independent, which the verification suite measures.
    """
    from scipy.linalg import eigh

    from .quadrature import rule_tet, rule_triangle

    mesh = space.mesh
    elem = space.scalar
    r3 = rule_tet(2 * space.degree)
    r2 = rule_triangle(2 * space.degree)
    vals3 = elem.eval(r3.points)
    vref = vals3.T @ (r3.weights[:, None] * vals3)

    face_vals = {}
    for f in range(mesh.num_faces):
        for side in range(2):
            cell = mesh.face_cells[f, side]
            if cell < 0:
                continue
            lv = space.local_vertex_indices(int(cell), mesh.faces[f])
            if lv not in face_vals:
                v, _ = space.face_tables("vec", lv, r2)
                face_vals[lv] = v.T @ (r2.weights[:, None] * v)

    bnds = {}
    for f in range(mesh.num_faces):
        for side in range(2):
            cell = int(mesh.face_cells[f, side])
            if cell < 0:
                continue
            lv = space.local_vertex_indices(cell, mesh.faces[f])
            part = 2.0 * mesh.face_area[f] * face_vals[lv]
            bnds[cell] = bnds.get(cell, 0.0) + part

    worst = 0.0
    for cell, bmat in bnds.items():
        vmat = space.cell_detabs[cell] * vref
        lam = eigh(bmat, vmat, eigvals_only=True)[-1]
        worst = max(worst, float(mesh.cell_h[cell] * lam))
    return worst


def eoc(hs, errors):
    """Observed convergence orders between consecutive levels."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(hs) != len(errors) or len(hs) < 2:
        raise ValueError("need matching h and error sequences of length >= 2")
    return [
        float(np.log(errors[i] / errors[i + 1]) / np.log(hs[i] / hs[i + 1]))
        for i in range(len(hs) - 1)
    ]


def dg_error(space, materials, x, exact, *, star=False):
    """Componentwise DG (and optionally star) error against an exact triple.

    Returns a dict with the six DG parts (square roots), the three star
    parts when requested, and the combined ``dg`` / ``star`` values.
    Evaluation uses a quadrature two degrees above assembly.
    """
    omega, mu0 = materials.omega, materials.mu0
    _, sigma = cell_coefficients(space, materials)
    acc = {p: 0.0 for p in DG_PARTS + STAR_PARTS}
    x = np.asarray(x, dtype=np.complex128)
    degree = 2 * space.degree + 4

    for family, d in entity_tables(space, materials, degree):
        w, dofs = d["w"], d["dofs"]
        if family == "cond_vol":
            vh = np.einsum("qdv,cd->cqv", d["vec"], x[dofs])
            he = _eval_vec(exact.h, d["cells"], d["qpts"])
            diff = he - vh
            acc["l2C"] += float(
                np.einsum(
                    "cq,cq->", w * (omega * d["mu"])[:, None], _abs2(diff)
                ).real
            )
            ch = np.einsum("cqdv,cd->cqv", d["curls"], x[dofs])
            ce = _eval_vec(exact.curl_h, d["cells"], d["qpts"])
            diff = ce - ch
            acc["curlC"] += float(
                np.einsum("cq,cq->", w / d["sigma"][:, None], _abs2(diff)).real
            )
        elif family == "ins_vol":
            wh = np.einsum("cqdv,cd->cqv", d["gradk"], x[dofs])
            we = _eval_vec(exact.w_field, d["cells"], d["qpts"])
            acc["gradI"] += omega * mu0 * float(
                np.einsum("cq,cq->", w, _abs2(we - wh)).real
            )
        elif family == "cond_face":
            jh = np.einsum("cqdv,cd->cqv", d["jump"], x[dofs])
            n = d["n"]
            h_own = _eval_vec(exact.h, d["cells_own"], d["qpts"])
            if d["interface"]:
                other = _eval_vec(exact.w_field, d["cells_nb"], d["qpts"])
            else:
                other = _eval_vec(exact.h, d["cells_nb"], d["qpts"])
            je = np.cross(h_own, n[:, None, :]) - np.cross(other, n[:, None, :])
            wgt = 1.0 / (d["s"] * d["h"])
            acc["jumpC"] += float(
                np.einsum("cq,cq->", w * wgt[:, None], _abs2(je - jh)).real
            )
            if star:
                ah = np.einsum("cqdv,cd->cqv", d["avg"], x[dofs])
                c_own = _eval_vec(exact.curl_h, d["cells_own"], d["qpts"])
                if d["interface"]:
                    ae = c_own / d["sigma_own"][:, None, None]
                else:
                    c_nb = _eval_vec(exact.curl_h, d["cells_nb"], d["qpts"])
                    ae = 0.5 * (
                        c_own / d["sigma_own"][:, None, None]
                        + c_nb / d["sigma_nb"][:, None, None]
                    )
                acc["avgC"] += float(
                    np.einsum(
                        "cq,cq->", w * (d["s"] * d["h"])[:, None], _abs2(ae - ah)
                    ).real
                )
        elif family == "ins_face":
            jh = np.einsum("cqdv,cd->cqv", d["jumpn"], x[dofs])
            psi0 = _eval_scalar(exact.psi, d["cells_own"], d["qpts"])
            if d["interior"]:
                psi1 = _eval_scalar(exact.psi, d["cells_nb"], d["qpts"])
                jump_psi = psi0 - psi1
            else:
                jump_psi = psi0
            je = jump_psi[:, :, None] * d["n"][:, None, :]
            acc["jumpI"] += omega * mu0 * float(
                np.einsum("cq,cq->", w / d["h"][:, None], _abs2(je - jh)).real
            )
            if star:
                ah = np.einsum("cqdv,cd->cqv", d["avg"], x[dofs])
                w0 = _eval_vec(exact.w_field, d["cells_own"], d["qpts"])
                if d["interior"]:
                    w1 = _eval_vec(exact.w_field, d["cells_nb"], d["qpts"])
                    ae = 0.5 * (w0 + w1)
                else:
                    ae = w0
                acc["avgI"] += omega * mu0 * float(
                    np.einsum("cq,cq->", w * d["h"][:, None], _abs2(ae - ah)).real
                )
        elif family == "edge":
            jh = np.einsum("cqdv,cd->cqv", d["jumpt"], x[dofs])
            psi1 = _eval_scalar(exact.psi, d["cells_ins"][:, 0], d["qpts"])
            psi2 = _eval_scalar(exact.psi, d["cells_ins"][:, 1], d["qpts"])
            je = (
                psi1[:, :, None] * d["t1"][:, None, :]
                + psi2[:, :, None] * d["t2"][:, None, :]
            )
            wgt = 1.0 / (d["s"] * d["h"] ** 2)
            acc["jumpE"] += float(
                np.einsum("cq,cq->", w * wgt[:, None], _abs2(je - jh)).real
            )
            if star:
                ah = np.einsum("cqdv,cd->cqv", d["avg"], x[dofs])
                c1 = _eval_vec(exact.curl_h, d["cells_cond"][:, 0], d["qpts"])
                c2 = _eval_vec(exact.curl_h, d["cells_cond"][:, 1], d["qpts"])
                s1 = sigma[d["cells_cond"][:, 0]]
                s2 = sigma[d["cells_cond"][:, 1]]
                ae = 0.5 * (
                    c1 / s1[:, None, None] + c2 / s2[:, None, None]
                )
                acc["avgE"] += float(
                    np.einsum(
                        "cq,cq->", w * (d["s"] * d["h"] ** 2)[:, None], _abs2(ae - ah)
                    ).real
                )

    out = {p: float(np.sqrt(max(acc[p], 0.0))) for p in DG_PARTS}
    out["dg"] = float(np.sqrt(sum(acc[p] for p in DG_PARTS)))
    if star:
        for p in STAR_PARTS:
            out[p] = float(np.sqrt(max(acc[p], 0.0)))
        out["star"] = float(
            np.sqrt(sum(acc[p] for p in DG_PARTS + STAR_PARTS))
        )
    return out


def _abs2(arr):
    return (arr.real**2 + arr.imag**2).sum(axis=-1)


def _eval_vec(fn, cells, qpts):
    out = np.zeros(qpts.shape[:2] + (3,), dtype=np.complex128)
    for i, c in enumerate(cells):
        out[i] = np.asarray(fn(int(c), qpts[i]))
    return out


def _eval_scalar(fn, cells, qpts):
    out = np.zeros(qpts.shape[:2], dtype=np.complex128)
    for i, c in enumerate(cells):
        out[i] = np.asarray(fn(int(c), qpts[i]))
    return out
