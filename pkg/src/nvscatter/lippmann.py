"""Integral equation for mu and the modified Fredholm determinant.

mu(z, lambda) solves mu = 1 + Conv_g(v * mu) where Conv_g is convolution
against the tabulated lambda-dependent fundamental solution.  The weighted
kernel

    A(z, zeta) = (1+|z|)^(-(2+eps)/2) g(z-zeta) v(zeta) (1+|zeta|)^((2+eps)/2) h^2

is Hilbert-Schmidt for decaying v, and the regularized determinant

    Delta = prod_i (1 - mu_i) exp(mu_i)            (mu_i = eigenvalues of A)
          = det(I - A) * exp(Tr A)

detects the exceptional set E = {lambda : Delta(lambda) = 0} where the
mu-equation loses unique solvability.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor
from scipy.sparse.linalg import LinearOperator, lgmres

from .grids import Grid, LambdaGrid, Potential
from .greens import GreensTable, build_greens_table

DENSE_N_CAP = 128
SUPPORT_RTOL = 1e-12
MU_TOL = 1e-10
EXCEPTIONAL_RTOL = 1e-6


class ExceptionalSetError(RuntimeError):
    """mu iteration failed to converge; lambda likely in the exceptional set."""


def _check_same_grid(v: Potential, table: GreensTable) -> None:
    if v.grid != table.grid:
        raise ValueError("potential and table grids differ")


# ---------------------------------------------------------------------------
# convolution against the tabulated kernel


def conv_kernel_hat(table: GreensTable) -> np.ndarray:
    """FFT of the zero-padding convolution kernel, quadrature weight folded in.

    The table holds g on difference vectors (2N per axis); rolling it puts
    offset 0 at index 0 so a circular convolution of size 2N reproduces the
    linear convolution on the N x N grid exactly.
    """
    N = table.grid.N
    kern = np.roll(table.samples, (-N, -N), axis=(0, 1))
    return np.fft.fft2(kern) * table.grid.h ** 2


def apply_conv(khat: np.ndarray, f: np.ndarray) -> np.ndarray:
    """h^2 * sum_zeta g(z - zeta) f(zeta), all z at once via padded FFT."""
    N = f.shape[0]
    pad = np.zeros((2 * N, 2 * N), dtype=complex)
    pad[:N, :N] = f
    return np.fft.ifft2(khat * np.fft.fft2(pad))[:N, :N]


# ---------------------------------------------------------------------------
# mu solve


@dataclass
class MuField:
    """Solution of mu = 1 + Conv_g(v mu) on the grid.

    The exponentially growing solution psi = exp(-(lam*conj(z)+z/lam)/2)*mu
    is derivable and never stored.
    """

    lam: complex
    grid: Grid
    samples: np.ndarray
    residual: float
    iterations: int


def solve_mu(v: Potential, table: GreensTable, tol: float = MU_TOL,
             maxiter: int = 400) -> MuField:
    """Solve the integral equation by Krylov iteration on the FFT operator.

    Residual is the relative 2-norm of mu - 1 - Conv_g(v mu).  Stagnation is
    reported as ExceptionalSetError since non-convergence at reasonable
    resolution signals lambda in (or near) the exceptional set E.
    """
    _check_same_grid(v, table)
    N = v.grid.N
    if not np.any(v.samples):
        return MuField(table.lam, v.grid, np.ones((N, N), dtype=complex),
                       0.0, 0)
    khat = conv_kernel_hat(table)
    vv = v.samples

    def matvec(x):
        m = x.reshape(N, N)
        return (m - apply_conv(khat, vv * m)).ravel()

    op = LinearOperator((N * N, N * N), matvec=matvec, dtype=complex)
    rhs = np.ones(N * N, dtype=complex)
    x0 = (1.0 + apply_conv(khat, vv)).ravel()  # Born start
    it_count = [0]

    def _cb(xk):
        it_count[0] += 1

    x, info = lgmres(op, rhs, x0=x0, rtol=0.05 * tol, atol=0.0,
                     maxiter=maxiter, callback=_cb)
    res = np.linalg.norm(matvec(x) - rhs) / np.linalg.norm(rhs)
    if info != 0 or not np.isfinite(res) or res > tol:
        raise ExceptionalSetError(
            f"mu iteration non-convergent at lambda={table.lam:.6g} "
            f"(residual {res:.3e}) -- lambda likely in exceptional set E")
    return MuField(table.lam, v.grid, x.reshape(N, N), float(res),
                   it_count[0])


# ---------------------------------------------------------------------------
# weighted kernel


@dataclass
class KernelMatrix:
    """Dense discretization of the weighted kernel, support-restricted.

    Columns where v vanishes (below support_rtol * max|v|) are identically
    zero and contribute only zero eigenvalues, so the dense block keeps just
    the support nodes; `mask` records which grid nodes those are.  hs_norm is
    the Hilbert-Schmidt (Frobenius) norm over ALL grid rows, the quantity
    that stays finite as the domain grows.
    """

    lam: complex
    grid: Grid
    eps: float
    mask: np.ndarray
    dense: np.ndarray
    trace: complex
    hs_norm: float
    block_fro: float

    @property
    def size(self) -> int:
        return self.dense.shape[0]


def build_kernel(v: Potential, table: GreensTable, eps: float = 1.0,
                 support_rtol: float = SUPPORT_RTOL,
                 dense_cap: int = DENSE_N_CAP) -> KernelMatrix:
    """Assemble the dense weighted kernel block on the support of v."""
    _check_same_grid(v, table)
    if eps <= 0:
        raise ValueError("eps must be positive")
    N = v.grid.N
    if N > dense_cap:
        raise ValueError(f"dense determinant mode capped at N={dense_cap}; "
                         "got N={N}")
    h = v.grid.h
    vmax = np.max(np.abs(v.samples))
    mask = np.abs(v.samples) > support_rtol * vmax if vmax > 0 else \
        np.zeros((N, N), dtype=bool)
    ii, jj = np.nonzero(mask)
    ns = ii.size
    if ns == 0:
        return KernelMatrix(table.lam, v.grid, eps, mask,
                            np.zeros((0, 0), dtype=complex), 0j, 0.0, 0.0)
    z = v.grid.nodes()[mask]
    w = (1.0 + np.abs(z)) ** ((2.0 + eps) / 2.0)
    col = v.samples[mask] * h * h * w
    gblock = table.samples[ii[:, None] - ii[None, :] + N,
                           jj[:, None] - jj[None, :] + N]
    dense = (gblock * col[None, :]) / w[:, None]
    trace = table.samples[N, N] * complex(np.sum(v.samples[mask])) * h * h
    block_fro = float(np.linalg.norm(dense))

    # full-row HS norm: all grid rows against the support columns, chunked
    inv_w2 = (1.0 + np.abs(v.grid.nodes())) ** (-(2.0 + eps))
    ai = np.arange(N)[:, None, None]
    aj = np.arange(N)[None, :, None]
    hs2 = 0.0
    for start in range(0, ns, 256):
        sl = slice(start, start + 256)
        gb = table.samples[ai - ii[None, None, sl] + N,
                           aj - jj[None, None, sl] + N]
        s = np.einsum("abk,ab->k", np.abs(gb) ** 2, inv_w2)
        hs2 += float(np.sum(np.abs(col[sl]) ** 2 * s))
    return KernelMatrix(table.lam, v.grid, eps, mask, dense, trace,
                        float(np.sqrt(hs2)), block_fro)


def solve_weighted(kernel: KernelMatrix) -> np.ndarray:
    """Direct dense solve of (I - A) m = weighted 1 on the support nodes.

    Returns mu = w*m there; cross-validates solve_mu.
    """
    ns = kernel.size
    if ns == 0:
        return np.ones(0, dtype=complex)
    z = kernel.grid.nodes()[kernel.mask]
    w = (1.0 + np.abs(z)) ** ((2.0 + kernel.eps) / 2.0)
    m = np.linalg.solve(np.eye(ns) - kernel.dense, 1.0 / w)
    return w * m


# ---------------------------------------------------------------------------
# modified Fredholm determinant


@dataclass
class DeterminantSample:
    lam: complex
    delta: complex
    im_residual: float
    n_eigs: int
    method: str
    hs_norm: float
    flag: str = ""
    diagnostics: dict = field(default_factory=dict)


def _logdet_lu(mat: np.ndarray) -> complex:
    lu, piv = lu_factor(mat)
    swaps = int(np.sum(piv != np.arange(len(piv))))
    logdet = complex(np.sum(np.log(np.diag(lu).astype(complex))))
    if swaps % 2:
        logdet += 1j * np.pi
    return logdet


def _head_eigenvalues(kernel: KernelMatrix, rank: int, tail_tol: float,
                      dense_eig_cap: int = 2500):
    """All eigenvalues when the block is small, else a randomized projection.

    Projection: Q spans A*Omega; nonzero eigenvalues of Q Q^H A equal those
    of the small matrix (Q^H A) Q, and the discarded part is measured by the
    Frobenius defect d^2 = ||A||_F^2 - ||Q^H A||_F^2, which bounds the tail
    eigenvalue energy sum |mu_i|^2.  The caller repairs the tail to second
    order through the exact Tr A^2, so d only needs to make the THIRD-order
    remainder (at most d^3) negligible; rank doubles until d^2 <= tail_tol.
    """
    a = kernel.dense
    ns = a.shape[0]
    if ns <= dense_eig_cap:
        return np.linalg.eigvals(a), 0.0
    rng = np.random.default_rng(12345)
    r = min(rank, ns)
    while True:
        omega = rng.standard_normal((ns, r)) + 1j * rng.standard_normal((ns, r))
        q, _ = np.linalg.qr(a @ omega)
        b = q.conj().T @ a
        defect2 = max(kernel.block_fro ** 2 - np.linalg.norm(b) ** 2, 0.0)
        if defect2 <= tail_tol or r >= ns:
            return np.linalg.eigvals(b @ q), float(np.sqrt(defect2))
        r = min(2 * r, ns)


def modified_fredholm_det(kernel: KernelMatrix, method: str = "eigen",
                          rank: int = 768, tail_tol: float = 1e-6,
                          near_one_tol: float = 1e-12) -> DeterminantSample:
    """Delta = prod (1 - mu_i) e^{mu_i} (eigen) or det(I-A) e^{Tr A} (lu).

    The eigen backend accumulates ln(1-mu_i)+mu_i in decreasing and
    increasing |mu_i| order and records the gap; an eigenvalue within
    near_one_tol of 1 marks lambda as (near) exceptional.  When the head
    spectrum is randomized-truncated, ln Delta gains the exact second-order
    tail term -(Tr A^2 - sum mu_head^2)/2.
    """
    ns = kernel.size
    if ns == 0:
        return DeterminantSample(kernel.lam, 1.0 + 0j, 0.0, 0, method, 0.0)
    if method == "lu":
        logdet = _logdet_lu(np.eye(ns) - kernel.dense)
        delta = np.exp(logdet + kernel.trace)
        return DeterminantSample(kernel.lam, complex(delta),
                                 abs(delta.imag), ns, "lu-logdet",
                                 kernel.hs_norm)
    if method != "eigen":
        raise ValueError(f"unknown method {method!r}")
    mu, tail = _head_eigenvalues(kernel, rank, tail_tol)
    order = np.argsort(np.abs(mu))[::-1]
    terms = np.log1p(-mu[order]) + mu[order]
    flag = ""
    if np.min(np.abs(1.0 - mu)) < near_one_tol:
        flag = "lambda in (or near) exceptional set E"
    tail_term = 0j
    if tail > 0:
        tr2 = complex(np.sum(kernel.dense * kernel.dense.T))
        tail_term = -0.5 * (tr2 - complex(np.sum(mu * mu)))
    s_desc = complex(np.sum(terms)) + tail_term
    s_asc = complex(np.sum(terms[::-1])) + tail_term
    delta = np.exp(s_desc)
    diag = {"order_gap": abs(np.exp(s_asc) - delta),
            "tail_defect": tail, "tail_bound": tail ** 3}
    return DeterminantSample(kernel.lam, complex(delta), abs(delta.imag),
                             len(mu), "eigen", kernel.hs_norm, flag, diag)


# ---------------------------------------------------------------------------
# lambda-grid determinant scan and exceptional-set detection


def determinant_scan(v: Potential, lgrid: LambdaGrid, eps: float = 1.0,
                     method: str = "eigen", threads: int = 1,
                     table_opts: dict | None = None) -> list[DeterminantSample]:
    """Determinant per lambda; per-point failures become flagged samples."""
    opts = table_opts or {}

    def one(point):
        lam = point.lam
        try:
            table = build_greens_table(v.grid, lam, **opts)
            kern = build_kernel(v, table, eps=eps)
            return modified_fredholm_det(kern, method=method)
        except Exception as exc:  # noqa: BLE001 - recorded, not fatal
            return DeterminantSample(lam, np.nan + 0j, np.nan, 0, method,
                                     np.nan, flag=f"failed: {exc}")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, lgrid.points))
    return [one(p) for p in lgrid.points]


@dataclass
class ExceptionalScan:
    flagged: list
    samples: list
    t_value: complex | None


def detect_exceptional(v: Potential, lgrid: LambdaGrid, eps: float = 1.0,
                       exceptional_rtol: float = EXCEPTIONAL_RTOL,
                       threads: int = 1,
                       samples: list | None = None) -> ExceptionalScan:
    """Flag lambda where |Delta| drops below exceptional_rtol * max|Delta|.

    Also reports the (constant) value of Delta on the unit circle when the
    grid contains |lambda| = 1 samples.
    """
    if samples is None:
        samples = determinant_scan(v, lgrid, eps=eps, threads=threads)
    finite = [s for s in samples if np.isfinite(s.delta)]
    if not finite:
        return ExceptionalScan([], samples, None)
    dmax = max(abs(s.delta) for s in finite)
    flagged = [s.lam for s in finite if abs(s.delta) < exceptional_rtol * dmax]
    on_t = [s.delta for s, p in zip(samples, lgrid.points)
            if p.on_T and np.isfinite(s.delta)]
    t_value = complex(np.mean(on_t)) if on_t else None
    return ExceptionalScan(flagged, samples, t_value)


def save_determinant_csv(samples: list, path) -> None:
    """CSV columns: re/im lambda, polar lambda, re/im Delta, method, hs, flag."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["re_lambda", "im_lambda", "abs_lambda", "arg_lambda",
                     "re_delta", "im_delta", "method", "hs_norm", "flag"])
        for s in samples:
            lam = complex(s.lam)
            wr.writerow([repr(lam.real), repr(lam.imag), repr(abs(lam)),
                         repr(float(np.angle(lam))), repr(s.delta.real),
                         repr(s.delta.imag), s.method, repr(float(s.hs_norm)),
                         s.flag])
