# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels (hot path).

Mirrors the contract of ``_sv_numpy``: packed gate arrays applied to a dense
complex128 amplitude vector, Z^n expectation, and the adjoint-mode gradient
of the expectation with respect to every rotation angle. Qubit ``q`` is bit
``q`` of the basis index; gate conventions match ``_sv_numpy``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()

KIND_H = 0
KIND_RY = 1
KIND_RZ = 2
KIND_CZ = 3

ctypedef double complex cplx

cdef int _KH = 0, _KRY = 1, _KRZ = 2, _KCZ = 3


cdef inline void _ry(cplx* a, Py_ssize_t dim, int q, double angle) noexcept nogil:
    cdef double c = cos(0.5 * angle)
    cdef double s = sin(0.5 * angle)
    cdef Py_ssize_t stride = (<Py_ssize_t> 1) << q
    cdef Py_ssize_t group = stride << 1
    cdef Py_ssize_t base = 0, i, i0, i1
    cdef cplx a0, a1
    while base < dim:
        for i in range(stride):
            i0 = base + i
            i1 = i0 + stride
            a0 = a[i0]
            a1 = a[i1]
            a[i0] = c * a0 - s * a1
            a[i1] = s * a0 + c * a1
        base += group


cdef inline void _rz(cplx* a, Py_ssize_t dim, int q, double angle) noexcept nogil:
    cdef double c = cos(0.5 * angle)
    cdef double s = sin(0.5 * angle)
    cdef cplx p0 = c - 1j * s   # exp(-i angle/2)
    cdef cplx p1 = c + 1j * s
    cdef Py_ssize_t stride = (<Py_ssize_t> 1) << q
    cdef Py_ssize_t group = stride << 1
    cdef Py_ssize_t base = 0, i, i0
    while base < dim:
        for i in range(stride):
            i0 = base + i
            a[i0] = a[i0] * p0
            a[i0 + stride] = a[i0 + stride] * p1
        base += group


cdef inline void _h(cplx* a, Py_ssize_t dim, int q) noexcept nogil:
    cdef double inv = 1.0 / sqrt(2.0)
    cdef Py_ssize_t stride = (<Py_ssize_t> 1) << q
    cdef Py_ssize_t group = stride << 1
    cdef Py_ssize_t base = 0, i, i0, i1
    cdef cplx a0, a1
    while base < dim:
        for i in range(stride):
            i0 = base + i
            i1 = i0 + stride
            a0 = a[i0]
            a1 = a[i1]
            a[i0] = (a0 + a1) * inv
            a[i1] = (a0 - a1) * inv
        base += group


cdef inline void _cz(cplx* a, Py_ssize_t dim, int qa, int qb) noexcept nogil:
    cdef Py_ssize_t both = ((<Py_ssize_t> 1) << qa) | ((<Py_ssize_t> 1) << qb)
    cdef Py_ssize_t i
    for i in range(dim):
        if (i & both) == both:
            a[i] = -a[i]


cdef inline int _parity(Py_ssize_t x) noexcept nogil:
    x ^= x >> 32
    x ^= x >> 16
    x ^= x >> 8
    x ^= x >> 4
    x ^= x >> 2
    x ^= x >> 1
    return <int> (x & 1)


cdef void _apply_all(cplx* a, Py_ssize_t dim,
                     const cnp.int8_t* kinds, const cnp.int32_t* qa,
                     const cnp.int32_t* qb, const double* angles,
                     Py_ssize_t n_gates) noexcept nogil:
    cdef Py_ssize_t g
    cdef int kind
    for g in range(n_gates):
        kind = kinds[g]
        if kind == _KRY:
            _ry(a, dim, qa[g], angles[g])
        elif kind == _KRZ:
            _rz(a, dim, qa[g], angles[g])
        elif kind == _KH:
            _h(a, dim, qa[g])
        else:
            _cz(a, dim, qa[g], qb[g])


cdef inline double _grad_dot(cplx* lam, cplx* psi, Py_ssize_t dim,
                             int kind, int q, double angle) noexcept nogil:
    # 2 Re <lam| dU/dangle |psi>, psi being the state *before* the gate.
    cdef double c = cos(0.5 * angle)
    cdef double s = sin(0.5 * angle)
    cdef cplx p0 = c - 1j * s
    cdef cplx p1 = c + 1j * s
    cdef Py_ssize_t stride = (<Py_ssize_t> 1) << q
    cdef Py_ssize_t group = stride << 1
    cdef Py_ssize_t base = 0, i, i0, i1
    cdef cplx acc = 0
    cdef cplx d0, d1
    while base < dim:
        for i in range(stride):
            i0 = base + i
            i1 = i0 + stride
            if kind == _KRY:
                d0 = 0.5 * (-s * psi[i0] - c * psi[i1])
                d1 = 0.5 * (c * psi[i0] - s * psi[i1])
            else:
                d0 = -0.5j * p0 * psi[i0]
                d1 = 0.5j * p1 * psi[i1]
            acc = acc + d0 * lam[i0].conjugate() + d1 * lam[i1].conjugate()
        base += group
    return 2.0 * acc.real


def zero_state(int n_qubits):
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return amps


def apply_ops(cnp.ndarray[cplx, ndim=1] amps, int n_qubits,
              cnp.ndarray[cnp.int8_t, ndim=1] kinds,
              cnp.ndarray[cnp.int32_t, ndim=1] qa,
              cnp.ndarray[cnp.int32_t, ndim=1] qb,
              cnp.ndarray[double, ndim=1] angles):
    """Apply the packed gate list to ``amps`` in place."""
    cdef Py_ssize_t dim = (<Py_ssize_t> 1) << n_qubits
    _apply_all(<cplx*> amps.data, dim,
               <const cnp.int8_t*> kinds.data, <const cnp.int32_t*> qa.data,
               <const cnp.int32_t*> qb.data, <const double*> angles.data,
               kinds.shape[0])


def run(int n_qubits,
        cnp.ndarray[cnp.int8_t, ndim=1] kinds,
        cnp.ndarray[cnp.int32_t, ndim=1] qa,
        cnp.ndarray[cnp.int32_t, ndim=1] qb,
        cnp.ndarray[double, ndim=1] angles):
    """Evolve |0...0> through the packed gate list."""
    amps = zero_state(n_qubits)
    apply_ops(amps, n_qubits, kinds, qa, qb, angles)
    return amps


def expval_z(cnp.ndarray[cplx, ndim=1] amps, int n_qubits):
    """<Z tensor ... tensor Z>; exactly real by construction."""
    cdef cplx* a = <cplx*> amps.data
    cdef Py_ssize_t dim = (<Py_ssize_t> 1) << n_qubits
    cdef Py_ssize_t i
    cdef double e = 0.0, p
    for i in range(dim):
        p = a[i].real * a[i].real + a[i].imag * a[i].imag
        if _parity(i):
            e -= p
        else:
            e += p
    return e


def expval_z_and_grad(int n_qubits,
                      cnp.ndarray[cnp.int8_t, ndim=1] kinds,
                      cnp.ndarray[cnp.int32_t, ndim=1] qa,
                      cnp.ndarray[cnp.int32_t, ndim=1] qb,
                      cnp.ndarray[double, ndim=1] angles):
    """Forward expectation of Z^n plus its adjoint (reverse-sweep) gradient.

    Returns ``(expval, grads)`` with one gradient entry per rotation gate,
    in gate order.
    """
    cdef Py_ssize_t dim = (<Py_ssize_t> 1) << n_qubits
    cdef Py_ssize_t n_gates = kinds.shape[0]
    cdef Py_ssize_t g, i, n_rot = 0
    cdef int kind
    cdef double angle

    psi_arr = zero_state(n_qubits)
    lam_arr = np.empty(dim, dtype=np.complex128)
    cdef cplx* psi = <cplx*> (<cnp.ndarray> psi_arr).data
    cdef cplx* lam = <cplx*> (<cnp.ndarray> lam_arr).data
    cdef const cnp.int8_t* k = <const cnp.int8_t*> kinds.data
    cdef const cnp.int32_t* a = <const cnp.int32_t*> qa.data
    cdef const cnp.int32_t* b = <const cnp.int32_t*> qb.data
    cdef const double* ang = <const double*> angles.data

    for g in range(n_gates):
        if k[g] == _KRY or k[g] == _KRZ:
            n_rot += 1
    grads_arr = np.zeros(n_rot)
    cdef double* grads = <double*> (<cnp.ndarray> grads_arr).data

    cdef double e = 0.0, p
    cdef Py_ssize_t r = n_rot - 1
    with nogil:
        _apply_all(psi, dim, k, a, b, ang, n_gates)
        for i in range(dim):
            p = psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
            if _parity(i):
                e -= p
                lam[i] = -psi[i]
            else:
                e += p
                lam[i] = psi[i]
        for g in range(n_gates - 1, -1, -1):
            kind = k[g]
            angle = ang[g]
            if kind == _KRY:
                _ry(psi, dim, a[g], -angle)
                grads[r] = _grad_dot(lam, psi, dim, kind, a[g], angle)
                r -= 1
                _ry(lam, dim, a[g], -angle)
            elif kind == _KRZ:
                _rz(psi, dim, a[g], -angle)
                grads[r] = _grad_dot(lam, psi, dim, kind, a[g], angle)
                r -= 1
                _rz(lam, dim, a[g], -angle)
            elif kind == _KH:
                _h(psi, dim, a[g])
                _h(lam, dim, a[g])
            else:
                _cz(psi, dim, a[g], b[g])
                _cz(lam, dim, a[g], b[g])
    return e, grads_arr
