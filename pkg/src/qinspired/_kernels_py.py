"""Pure-numpy implementation of the convolution hot kernels.

Same signatures as the compiled ``_kernels`` module. Patches are processed
in chunks so the (patches, channels, sites) temporaries stay small.
"""
import numpy as np

COS_SUM, COS_PROD, COS_PLUS, SIN_PLUS = 0, 1, 2, 3

_CHUNK = 4096


def _factors(mode, ct, st, cp, sp):
    # ct, st: (p, 1, s); cp, sp: (1, c, s)
    if mode == COS_SUM:
        return cp * ct - sp * st, -(sp * ct + cp * st)
    if mode == COS_PROD:
        return cp * ct, -sp * ct
    if mode == COS_PLUS:
        return cp + ct, np.broadcast_to(-sp, (ct.shape[0],) + sp.shape[1:])
    if mode == SIN_PLUS:
        return sp + ct, np.broadcast_to(cp, (ct.shape[0],) + cp.shape[1:])
    raise ValueError(f"unknown factor mode {mode}")


def product_forward(mode, sites, cos_t, sin_t, phi, sign):
    """out[p, c] = sign * prod_{s in sites} g(phi[c, s], theta[p, s])."""
    sites = np.asarray(sites, dtype=np.intp)
    n_patch, n_chan = cos_t.shape[0], phi.shape[0]
    cp = np.cos(phi[:, sites])[None]
    sp = np.sin(phi[:, sites])[None]
    out = np.empty((n_patch, n_chan))
    for start in range(0, n_patch, _CHUNK):
        sl = slice(start, start + _CHUNK)
        ct = cos_t[sl][:, sites][:, None, :]
        st = sin_t[sl][:, sites][:, None, :]
        f, _ = _factors(mode, ct, st, cp, sp)
        out[sl] = sign * np.prod(f, axis=2)
    return out


def product_grad(mode, sites, cos_t, sin_t, phi, sign, gout):
    """grad[c, s] = sum_p gout[p, c] * d out[p, c] / d phi[c, s]."""
    sites = np.asarray(sites, dtype=np.intp)
    n_patch = cos_t.shape[0]
    cp = np.cos(phi[:, sites])[None]
    sp = np.sin(phi[:, sites])[None]
    acc = np.zeros((phi.shape[0], sites.size))
    for start in range(0, n_patch, _CHUNK):
        sl = slice(start, start + _CHUNK)
        ct = cos_t[sl][:, sites][:, None, :]
        st = sin_t[sl][:, sites][:, None, :]
        f, df = _factors(mode, ct, st, cp, sp)
        ones = np.ones(f.shape[:2] + (1,))
        prefix = np.cumprod(np.concatenate([ones, f[:, :, :-1]], axis=2), axis=2)
        suffix = np.cumprod(np.concatenate([ones, f[:, :, :0:-1]], axis=2), axis=2)[:, :, ::-1]
        acc += np.einsum("pc,pcs->cs", gout[sl], df * prefix * suffix)
    grad = np.zeros_like(phi)
    grad[:, sites] = sign * acc
    return grad
