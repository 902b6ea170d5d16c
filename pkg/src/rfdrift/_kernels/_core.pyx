# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: chirp-train synthesis and the fused impairment chain.

Single pass per sample, no intermediate arrays. Math mirrors the numpy
fallbacks in lora.modulate and impairments.apply_device_chain; random inputs
(payload symbols, phase-noise increments) are generated by the caller so both
backends consume identical streams.
"""

from libc.math cimport cos, sin, M_PI

import numpy as np


def css_modulate(long long[::1] symbols, int sf, double bw, double fs, int n_preamble):
    """Chirp train for a symbol sequence, preceded by base upchirps.

    Each symbol k starts at frequency (k/M)*bw - bw/2, sweeps upward at
    bw^2/M Hz/s and wraps to -bw/2 once it reaches +bw/2; phase is continuous
    within a chirp and resets to 0 at each symbol boundary.
    """
    cdef Py_ssize_t m = 1 << sf
    cdef Py_ssize_t sps = <Py_ssize_t> (fs * m / bw + 0.5)
    cdef Py_ssize_t n_sym = symbols.shape[0]
    cdef Py_ssize_t total = (n_preamble + n_sym) * sps
    out_arr = np.empty(total, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t i, n, base
    cdef long long k
    cdef double f0, t_wrap, t, late, phase
    cdef double two_pi = 2.0 * M_PI
    cdef double slope = bw * bw / <double> m

    for i in range(n_preamble + n_sym):
        k = 0 if i < n_preamble else symbols[i - n_preamble]
        f0 = (<double> k / <double> m) * bw - bw / 2.0
        t_wrap = <double> (m - k) / bw
        base = i * sps
        for n in range(sps):
            t = <double> n / fs
            late = t - t_wrap
            if late < 0.0:
                late = 0.0
            phase = two_pi * (f0 * t + 0.5 * slope * t * t - bw * late)
            out[base + n] = cos(phase) + 1j * sin(phase)
    return out_arr


def device_chain(double complex[::1] iq, double a1, double a3,
                 double eps, double phi_rad, double dc_re, double dc_im,
                 double cfo_hz, double fs, double[::1] phase_increments):
    """Fused transmitter chain: PA, IQ imbalance, DC offset, CFO, phase noise.

    phase_increments holds the pre-drawn Wiener increments (one per sample);
    the running sum is formed here.
    """
    cdef Py_ssize_t n = iq.shape[0]
    if phase_increments.shape[0] != n:
        raise ValueError("phase_increments length must match iq length")
    out_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double gain_i = 1.0 + eps / 2.0
    cdef double gain_q = 1.0 - eps / 2.0
    cdef double cphi = cos(phi_rad)
    cdef double sphi = sin(phi_rad)
    cdef double two_pi_f = 2.0 * M_PI * cfo_hz
    cdef double theta = 0.0
    cdef double re, im, m2, pa_re, pa_im, bal_re, bal_im, ang, c, s
    cdef Py_ssize_t idx

    for idx in range(n):
        re = iq[idx].real
        im = iq[idx].imag
        m2 = re * re + im * im
        pa_re = a1 * re + a3 * m2 * re
        pa_im = a1 * im + a3 * m2 * im
        bal_re = gain_i * pa_re + dc_re
        bal_im = gain_q * (pa_im * cphi + pa_re * sphi) + dc_im
        theta += phase_increments[idx]
        ang = two_pi_f * <double> idx / fs + theta
        c = cos(ang)
        s = sin(ang)
        out[idx] = (bal_re * c - bal_im * s) + 1j * (bal_re * s + bal_im * c)
    return out_arr
