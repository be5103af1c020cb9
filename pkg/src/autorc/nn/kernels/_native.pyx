# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled convolution kernels: im2col gather and col2im scatter-add.

Same contracts as numpy_backend; selected automatically when this
extension built. The win over numpy is avoiding the strided-view copy
overhead and the python-level k*k loop on the scatter side.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "native"


def conv_out_size(int size, int kernel, int stride):
    return (size - kernel) // stride + 1


def im2col(cnp.ndarray x, int kernel, int stride):
    if x.dtype != np.float64:
        x = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, :, :, ::1] xv = np.ascontiguousarray(x)
    cdef Py_ssize_t b = xv.shape[0], h = xv.shape[1], w = xv.shape[2], c = xv.shape[3]
    cdef Py_ssize_t oh = (h - kernel) // stride + 1
    cdef Py_ssize_t ow = (w - kernel) // stride + 1
    out_arr = np.empty((b * oh * ow, kernel * kernel * c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t bi, oi, oj, ki, kj, ci, row, col, si, sj
    with nogil:
        for bi in range(b):
            for oi in range(oh):
                si = oi * stride
                for oj in range(ow):
                    sj = oj * stride
                    row = (bi * oh + oi) * ow + oj
                    col = 0
                    for ki in range(kernel):
                        for kj in range(kernel):
                            for ci in range(c):
                                out[row, col] = xv[bi, si + ki, sj + kj, ci]
                                col += 1
    return out_arr


def col2im(cnp.ndarray cols, x_shape, int kernel, int stride):
    cdef Py_ssize_t b = x_shape[0], h = x_shape[1], w = x_shape[2], c = x_shape[3]
    cdef Py_ssize_t oh = (h - kernel) // stride + 1
    cdef Py_ssize_t ow = (w - kernel) // stride + 1
    if cols.dtype != np.float64:
        cols = np.ascontiguousarray(cols, dtype=np.float64)
    cdef double[:, ::1] cv = np.ascontiguousarray(cols)
    out_arr = np.zeros((b, h, w, c), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t bi, oi, oj, ki, kj, ci, row, col, si, sj
    with nogil:
        for bi in range(b):
            for oi in range(oh):
                si = oi * stride
                for oj in range(ow):
                    sj = oj * stride
                    row = (bi * oh + oi) * ow + oj
                    col = 0
                    for ki in range(kernel):
                        for kj in range(kernel):
                            for ci in range(c):
                                out[bi, si + ki, sj + kj, ci] += cv[row, col]
                                col += 1
    return out_arr
