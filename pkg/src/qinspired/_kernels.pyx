# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution hot kernels. See _kernels_py.py for the reference."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

cdef enum:
    MAX_SITES = 64


cdef inline void _factor(int mode, double ct, double st, double cp, double sp,
                         double* f, double* df) noexcept nogil:
    if mode == 0:
        f[0] = cp * ct - sp * st
        df[0] = -(sp * ct + cp * st)
    elif mode == 1:
        f[0] = cp * ct
        df[0] = -sp * ct
    elif mode == 2:
        f[0] = cp + ct
        df[0] = -sp
    else:
        f[0] = sp + ct
        df[0] = cp


def product_forward(int mode, sites, const double[:, ::1] cos_t,
                    const double[:, ::1] sin_t, const double[:, ::1] phi,
                    double sign):
    cdef Py_ssize_t[::1] s_idx = np.ascontiguousarray(sites, dtype=np.intp)
    cdef Py_ssize_t n_patch = cos_t.shape[0], n_chan = phi.shape[0]
    cdef Py_ssize_t n_sites = s_idx.shape[0]
    if n_sites > MAX_SITES:
        raise ValueError("too many sites")
    if mode < 0 or mode > 3:
        raise ValueError(f"unknown factor mode {mode}")
    cdef double[:, ::1] cp = np.empty((n_chan, n_sites))
    cdef double[:, ::1] sp = np.empty((n_chan, n_sites))
    cdef Py_ssize_t p, c, k, s
    for c in range(n_chan):
        for k in range(n_sites):
            cp[c, k] = cos(phi[c, s_idx[k]])
            sp[c, k] = sin(phi[c, s_idx[k]])
    out_arr = np.empty((n_patch, n_chan))
    cdef double[:, ::1] out = out_arr
    cdef double ct[MAX_SITES]
    cdef double st[MAX_SITES]
    cdef double prod, f, df
    with nogil:
        for p in range(n_patch):
            for k in range(n_sites):
                ct[k] = cos_t[p, s_idx[k]]
                st[k] = sin_t[p, s_idx[k]]
            for c in range(n_chan):
                prod = sign
                for k in range(n_sites):
                    _factor(mode, ct[k], st[k], cp[c, k], sp[c, k], &f, &df)
                    prod = prod * f
                out[p, c] = prod
    return out_arr


def product_grad(int mode, sites, const double[:, ::1] cos_t,
                 const double[:, ::1] sin_t, const double[:, ::1] phi,
                 double sign, const double[:, ::1] gout):
    cdef Py_ssize_t[::1] s_idx = np.ascontiguousarray(sites, dtype=np.intp)
    cdef Py_ssize_t n_patch = cos_t.shape[0], n_chan = phi.shape[0]
    cdef Py_ssize_t n_sites = s_idx.shape[0]
    if n_sites > MAX_SITES:
        raise ValueError("too many sites")
    if mode < 0 or mode > 3:
        raise ValueError(f"unknown factor mode {mode}")
    cdef double[:, ::1] cp = np.empty((n_chan, n_sites))
    cdef double[:, ::1] sp = np.empty((n_chan, n_sites))
    cdef double[:, ::1] acc = np.zeros((n_chan, n_sites))
    cdef Py_ssize_t p, c, k
    for c in range(n_chan):
        for k in range(n_sites):
            cp[c, k] = cos(phi[c, s_idx[k]])
            sp[c, k] = sin(phi[c, s_idx[k]])
    cdef double ct[MAX_SITES]
    cdef double st[MAX_SITES]
    cdef double f[MAX_SITES]
    cdef double df[MAX_SITES]
    cdef double prefix[MAX_SITES]
    cdef double suffix, g
    with nogil:
        for p in range(n_patch):
            for k in range(n_sites):
                ct[k] = cos_t[p, s_idx[k]]
                st[k] = sin_t[p, s_idx[k]]
            for c in range(n_chan):
                g = gout[p, c]
                if g == 0.0:
                    continue
                prefix[0] = 1.0
                for k in range(n_sites):
                    _factor(mode, ct[k], st[k], cp[c, k], sp[c, k], &f[k], &df[k])
                    if k + 1 < n_sites:
                        prefix[k + 1] = prefix[k] * f[k]
                suffix = 1.0
                for k in range(n_sites - 1, -1, -1):
                    acc[c, k] += g * df[k] * prefix[k] * suffix
                    suffix = suffix * f[k]
    grad = np.zeros((n_chan, phi.shape[1]))
    idx = np.asarray(s_idx)
    grad[:, idx] = sign * np.asarray(acc)
    return grad
