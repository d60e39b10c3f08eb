# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled terrain self-occlusion march, operation-for-operation equal to
``_kernels_py.occluded``."""
import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor, sqrt

cnp.import_array()


def occluded(targets, cam, tops, double x0, double y0, double res, double max_top):
    cdef double[:, ::1] T = np.ascontiguousarray(targets, dtype=np.float64).reshape(-1, 3)
    cdef double[:, ::1] H = np.ascontiguousarray(tops, dtype=np.float64)
    cdef double cx = float(cam[0]), cy = float(cam[1]), cz = float(cam[2])
    cdef Py_ssize_t n_t = T.shape[0], nx = H.shape[0], ny = H.shape[1]
    out_arr = np.zeros(n_t, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i
    cdef long long k, n, a, b, ta, tb
    cdef double px, py, pz, dx, dy, dz, L, s_max, ds, s, qx, qy, qz
    with nogil:
        for i in range(n_t):
            px = T[i, 0]
            py = T[i, 1]
            pz = T[i, 2]
            dx = cx - px
            dy = cy - py
            dz = cz - pz
            if dz <= 0.0:
                out[i] = 1
                continue
            L = sqrt(dx * dx + dy * dy)
            if L == 0.0:
                continue
            if max_top > pz:
                s_max = (max_top - pz) / dz
            else:
                s_max = 0.0
            if s_max > 1.0:
                s_max = 1.0
            ds = (0.5 * res) / L
            n = <long long>ceil(s_max / ds)
            ta = <long long>floor((px - x0) / res)
            tb = <long long>floor((py - y0) / res)
            for k in range(1, n + 1):
                s = k * ds
                qx = px + s * dx
                qy = py + s * dy
                qz = pz + s * dz
                a = <long long>floor((qx - x0) / res)
                b = <long long>floor((qy - y0) / res)
                if a < 0 or a >= nx or b < 0 or b >= ny:
                    break
                if a == ta and b == tb:
                    continue
                if qz < H[a, b] - 1e-9:
                    out[i] = 1
                    break
    return out_arr.astype(bool)
