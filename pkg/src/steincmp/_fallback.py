"""Pure numpy implementations of the hot kernels.

These mirror ``_core.pyx`` operation for operation. The Gibbs sweep consumes
the same pre-drawn random numbers in the same order and produces identical
chains; the BoW Stein gram agrees to floating point rounding.
"""
import numpy as np

NAME = "python"


def lda_gibbs_sweeps(z, counts, X, b, a, pos, unif, out, first_sweep, burn_in):
    """Random-scan collapsed Gibbs updates for a batch of documents.

    z, counts are modified in place. ``pos``/``unif`` have shape (n, S*D) and
    hold, for each of the S sweeps in this chunk, the coordinate to update and
    the uniform used to pick its new topic. After sweep g (global index
    ``first_sweep + s``) with ``g >= burn_in`` the state is copied into
    ``out[:, g - burn_in, :]``.
    """
    n, D = z.shape
    K = b.shape[0]
    steps = pos.shape[1]
    rows = np.arange(n)
    bT = np.ascontiguousarray(b.T)  # L x K
    for step in range(steps):
        j = pos[:, step]
        old = z[rows, j]
        counts[rows, old] -= 1
        w = (a[None, :] + counts) * bT[X[rows, j]]
        cw = np.cumsum(w, axis=1)
        target = unif[:, step] * cw[:, K - 1]
        new = np.sum(cw <= target[:, None], axis=1)
        np.minimum(new, K - 1, out=new)
        z[rows, j] = new
        counts[rows, new] += 1
        if (step + 1) % D == 0:
            g = first_sweep + (step + 1) // D - 1
            if out is not None and g >= burn_in:
                out[:, g - burn_in, :] = z


def _bow_pair_terms(X, Bc, S, i0, i1):
    """Stein gram rows i0:i1 for the BoW Gaussian kernel (all columns)."""
    n, D = X.shape
    L = Bc.shape[1]
    Xi = X[i0:i1]
    Bi = Bc[i0:i1]
    Si = S[i0:i1]
    r = i1 - i0
    sq = np.sum(Bi**2, 1)[:, None] + np.sum(Bc**2, 1)[None, :] - 2 * Bi @ Bc.T
    N = sq.astype(float)
    k = np.exp(-N / (2.0 * D))

    v = Xi[:, None, :]  # word of x_i at d, broadcast over j
    vp = (v - 1) % L
    w = X[None, :, :]  # word of x_j at d
    wp = (w - 1) % L
    # u = B(x_i) - B(x_j); gather u at the four indices
    ridx = np.arange(r)[:, None, None]
    cidx = np.arange(n)[None, :, None]

    def u_at(idx):
        idx = np.broadcast_to(idx, (r, n, D))
        return Bi[ridx, idx] - Bc[cidx, idx]

    u_v = u_at(v)
    u_vp = u_at(vp)
    u_w = u_at(w)
    u_wp = u_at(wp)
    Ne = N[:, :, None]
    n_xb = Ne - 2 * u_v + 2 * u_vp + 2  # |u(xbar_d, y)|^2
    n_yb = Ne + 2 * u_w - 2 * u_wp + 2  # |u(x, ybar_d)|^2
    # delta = -e_v + e_vp + e_w - e_wp
    vv = np.broadcast_to(v, (r, n, D))
    vvp = np.broadcast_to(vp, (r, n, D))
    ww = np.broadcast_to(w, (r, n, D))
    wwp = np.broadcast_to(wp, (r, n, D))
    idx = (vv, vvp, ww, wwp)
    coef = (-1, 1, 1, -1)
    dd = np.zeros((r, n, D))
    for a_ in range(4):
        for b_ in range(4):
            dd += coef[a_] * coef[b_] * (idx[a_] == idx[b_])
    n_both = Ne + 2 * (-u_v + u_vp + u_w - u_wp) + dd
    c = 1.0 / (2.0 * D)
    ke = k[:, :, None]
    k_xb = np.exp(-n_xb * c)
    k_yb = np.exp(-n_yb * c)
    k_both = np.exp(-n_both * c)
    k1_ij = ke - k_xb  # k1(x_i, x_j)_d
    k1_ji = ke - k_yb  # k1(x_j, x_i)_d
    tr = np.sum(ke - k_xb - k_yb + k_both, axis=2)
    H = (
        k * (Si @ S.T)
        + np.sum(Si[:, None, :] * k1_ji, axis=2)
        + np.sum(k1_ij * S[None, :, :], axis=2)
        + tr
    )
    return H


def bow_stein_gram(X, Bc, S, block=32):
    """Full Stein gram for the BoW Gaussian kernel, mirrored from the upper triangle."""
    n = X.shape[0]
    H = np.empty((n, n))
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        H[i0:i1] = _bow_pair_terms(X, Bc, S, i0, i1)
    iu = np.triu_indices(n, k=1)
    H[(iu[1], iu[0])] = H[iu]
    return H
