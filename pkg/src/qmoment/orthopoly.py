"""Orthonormal polynomials of a symmetric moment sequence.

``P_n`` is built from a Cholesky factorisation of the Hankel moment matrix
``H = L L^T``: the rows of ``L^{-1}`` are the coefficient vectors.  Odd
moments vanish, so every coefficient with ``n - j`` odd is a structural
zero and the recurrence has no diagonal term::

    x P_n = b_n P_{n+1} + b_{n-1} P_{n-1},   b_n = k_n / k_{n+1}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import PositivityError, ValidationError
from .moments import MomentSequence, WeightSpec
from .qcore import GridFunction, QContext, grid_points, jackson_sum, to_mpf

DEFAULT_MAX_DEGREE = 24
PLATEAU_TOL = 1e-10
PLATEAU_RUN = 5


@dataclass(frozen=True)
class OrthoBasis:
    N: int
    b: tuple  # b_0 .. b_{N-1}
    coeffs: tuple  # coeffs[n][j], j = 0..n
    moments: MomentSequence

    @property
    def k(self) -> tuple:
        return tuple(row[-1] for row in self.coeffs)

    @property
    def mp(self):
        return self.moments.mp


def recurrence_from_moments(m: MomentSequence, N: int, max_degree: int = DEFAULT_MAX_DEGREE) -> OrthoBasis:
    """Orthonormal ``P_0..P_N`` from ``s_0..s_{2N}``.

    Raises :class:`PositivityError` on a non-positive pivot: either the
    moments are not those of a positive measure or the working precision is
    exhausted, so retry at higher precision.
    """
    if N < 0:
        raise ValidationError("N must be non-negative")
    if N > max_degree:
        raise ValidationError(f"degree {N} exceeds the cap {max_degree}; raise max_degree explicitly")
    if m.n_max < N:
        raise ValidationError(f"need moments up to s_{2 * N}, have s_{2 * m.n_max}")
    mp = m.mp
    size = N + 1
    H = [[m.s(i + j) for j in range(size)] for i in range(size)]
    L = [[mp.zero] * size for _ in range(size)]
    for j in range(size):
        d = H[j][j] - mp.fsum(L[j][t] ** 2 for t in range(j))
        if not d > 0:
            raise PositivityError(f"Hankel pivot {j} is {mp.nstr(d, 5)}; raise precision")
        L[j][j] = mp.sqrt(d)
        for i in range(j + 2, size, 2):
            L[i][j] = (H[i][j] - mp.fsum(L[i][t] * L[j][t] for t in range(j))) / L[j][j]
    # C = L^{-1}, lower triangular with the same checkerboard pattern
    C = [[mp.zero] * size for _ in range(size)]
    for i in range(size):
        C[i][i] = 1 / L[i][i]
        for j in range(i - 2, -1, -2):
            C[i][j] = -mp.fsum(C[i][t] * L[t][j] for t in range(j + 2, i + 1, 2)) / L[j][j]
    coeffs = tuple(tuple(C[n][: n + 1]) for n in range(size))
    b = tuple(coeffs[n][n] / coeffs[n + 1][n + 1] for n in range(N))
    return OrthoBasis(N, b, coeffs, m)


def eval_all(basis: OrthoBasis, x, n: int | None = None) -> list:
    """``[P_0(x), ..., P_n(x)]`` by the three-term recurrence; ``x`` may be complex."""
    n = basis.N if n is None else n
    if n > basis.N:
        raise ValidationError(f"degree {n} beyond the basis (N={basis.N})")
    mp = basis.mp
    x = to_mpf(mp, x)
    out = [to_mpf(mp, basis.coeffs[0][0])]
    prev = mp.zero
    for j in range(n):
        bj = to_mpf(mp, basis.b[j])
        b_prev = to_mpf(mp, basis.b[j - 1]) if j else mp.zero
        nxt = (x * out[-1] - b_prev * prev) / bj
        prev = out[-1]
        out.append(nxt)
    return out


def eval_p(basis: OrthoBasis, n: int, x):
    return eval_all(basis, x, n)[n]


def eval_coeffs(coeffs, x, mp):
    """Horner evaluation of a coefficient vector (lowest degree first)."""
    acc = mp.zero
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def second_kind(basis: OrthoBasis, m: MomentSequence | None = None) -> tuple:
    """Coefficient table of ``Q_n(x) = int (P_n(x) - P_n(y)) / (x - y) dmu(y)``.

    ``(x^j - y^j)/(x - y) = sum_{a<j} x^a y^(j-1-a)``, integrated termwise
    against the moments: ``Q_n[a] = sum_{j>a} c_{n,j} s_{j-1-a}``.
    """
    m = basis.moments if m is None else m
    mp = basis.mp
    table = []
    for n, row in enumerate(basis.coeffs):
        table.append(tuple(mp.fsum(row[j] * m.s(j - 1 - a) for j in range(a + 1, n + 1)) for a in range(n)))
    return tuple(table)


class NevanlinnaPartials(NamedTuple):
    z: object
    N: int
    A: object
    B: object
    C: object
    D: object
    last_increments: dict  # |increment| of each series at its last nonzero term
    increments_D: tuple

    def d_shrinks(self, tol: float = PLATEAU_TOL) -> bool:
        """True when the last nonzero ``D`` increment is below ``tol * |D_N|``."""
        last = self.last_increments["D"]
        return bool(last != 0 and last < tol * abs(self.D))


def nevanlinna_partials(basis: OrthoBasis, q_table, z, N: int) -> NevanlinnaPartials:
    """Partial sums over ``n < N`` of::

        A = z sum Q_n(0) Q_n(z)     B = -1 + z sum Q_n(0) P_n(z)
        C = 1 + z sum P_n(0) Q_n(z)  D = z sum P_n(0) P_n(z)
    """
    if N > basis.N + 1:
        raise ValidationError(f"N={N} needs degree {N - 1}, basis has {basis.N}")
    mp = basis.mp
    z = mp.mpc(z)
    P0 = eval_all(basis, 0)
    Pz = eval_all(basis, z)
    Q0 = [eval_coeffs(q_table[n], mp.zero, mp) for n in range(basis.N + 1)]
    Qz = [eval_coeffs(q_table[n], z, mp) for n in range(basis.N + 1)]
    A, B, C, D = mp.mpc(0), mp.mpc(-1), mp.mpc(1), mp.mpc(0)
    last = {"A": mp.zero, "B": mp.zero, "C": mp.zero, "D": mp.zero}
    inc_D = []
    for n in range(N):
        incs = {
            "A": z * Q0[n] * Qz[n],
            "B": z * Q0[n] * Pz[n],
            "C": z * P0[n] * Qz[n],
            "D": z * P0[n] * Pz[n],
        }
        A += incs["A"]
        B += incs["B"]
        C += incs["C"]
        D += incs["D"]
        inc_D.append(abs(incs["D"]))
        for key, val in incs.items():
            if val != 0:
                last[key] = abs(val)
    return NevanlinnaPartials(z, N, A, B, C, D, last, tuple(inc_D))


class DeterminacyDiag(NamedTuple):
    z: object
    partial_sums: tuple
    status: str


def determinacy_diag(basis: OrthoBasis, z, N: int | None = None) -> DeterminacyDiag:
    """Partial sums ``sum_{n<=N} |P_n(z)|^2``, read as evidence only.

    A plateau (relative increment below 1e-10 for 5 consecutive terms)
    suggests the series converges, as it does for indeterminate measures;
    steady growth is consistent with determinacy.
    """
    N = basis.N if N is None else N
    mp = basis.mp
    vals = eval_all(basis, mp.mpc(z), N)
    sums = []
    acc = mp.zero
    run = 0
    plateau = False
    for v in vals:
        inc = abs(v) ** 2
        acc += inc
        sums.append(acc)
        run = run + 1 if inc < PLATEAU_TOL * acc else 0
        plateau = plateau or run >= PLATEAU_RUN
    if plateau:
        status = "suggestive of indeterminacy at this truncation"
    elif all(b > a for a, b in zip(sums, sums[1:])):
        status = "consistent with determinacy"
    else:
        status = "no clear trend"
    return DeterminacyDiag(z, tuple(sums), status)


def symmetric_integral(g, weight: GridFunction, ctx: QContext):
    """``int g dmu`` for the even measure ``mu`` carrying ``weight`` on ``+-q^k``.

    Each grid mass is split evenly between ``q^k`` and ``-q^k``, which keeps
    the even moments equal to the half-line Jackson integrals and makes the
    odd ones vanish.
    """
    pts = grid_points(ctx)
    half = ctx.mp.mpf(1) / 2
    vals = {k: half * (g(pts[k]) + g(-pts[k])) * weight[k] for k in ctx.window}
    return jackson_sum(GridFunction(ctx, vals), ctx).value


def gram_matrix(basis: OrthoBasis, w: WeightSpec, ctx: QContext, n: int | None = None):
    """``[int P_i P_j dmu]`` for ``i, j <= n`` by Jackson summation on ``ctx``'s grid."""
    n = basis.N if n is None else n
    weight = w.sample(ctx)
    pts = grid_points(ctx)
    mp = ctx.mp
    plus = {k: eval_all(basis, pts[k], n) for k in ctx.window}
    minus = {k: eval_all(basis, -pts[k], n) for k in ctx.window}
    half = mp.mpf(1) / 2
    G = mp.matrix(n + 1, n + 1)
    for i in range(n + 1):
        for j in range(i, n + 1):
            vals = {k: half * (plus[k][i] * plus[k][j] + minus[k][i] * minus[k][j]) * weight[k] for k in ctx.window}
            G[i, j] = G[j, i] = jackson_sum(GridFunction(ctx, vals), ctx).value
    return G


def psi_functions(basis: OrthoBasis, w: WeightSpec, ctx: QContext, n: int | None = None) -> list[GridFunction]:
    """``psi_j = omega P_j`` on the grid, ``omega = sqrt(weight)``."""
    n = basis.N if n is None else n
    mp = ctx.mp
    weight = w.sample(ctx)
    pts = grid_points(ctx)
    vals = {k: eval_all(basis, pts[k], n) for k in ctx.window}
    return [GridFunction(ctx, {k: mp.sqrt(weight[k]) * vals[k][j] for k in ctx.window}) for j in range(n + 1)]


def max_identity_deviation(G) -> object:
    return max(abs(G[i, j] - (1 if i == j else 0)) for i in range(G.rows) for j in range(G.cols))
