"""Independent high-precision oracles used to pin expected values.

Everything here is implemented directly from the defining series/products in
mpmath arithmetic, deliberately sharing no code with the library under test.
"""

import mpmath
from mpmath import mp


def qpoch_log_series(z, base, terms=60):
    """(z; base)_inf via exp(sum_j log(1 - z base^j)), summed term by term."""
    with mp.workdps(40):
        z, base = mp.mpmathify(z), mp.mpmathify(base)
        acc = mp.mpf(0)
        for j in range(terms):
            acc += mp.log(1 - z * base**j)
        return complex(mp.exp(acc))


def theta_series(z, p, n_max=40):
    """theta(z; p) from the Laurent series
    sum_n p^{n(n-1)/2} (-z)^n / (p; p)_inf over n in [-n_max, n_max]."""
    with mp.workdps(40):
        z, p = mp.mpmathify(z), mp.mpmathify(p)
        s = mp.mpf(0)
        for n in range(-n_max, n_max + 1):
            s += p ** (mp.mpf(n * (n - 1)) / 2) * (-z) ** n
        pp = mp.mpf(1)
        for j in range(200):
            pp *= 1 - p ** (j + 1)
        return complex(s / pp)


def elliptic_gamma_product(z, p, q, order=60):
    """Gamma(z; p, q) as the raw double product over the triangle j + k <= order."""
    with mp.workdps(40):
        z, p, q = mp.mpmathify(z), mp.mpmathify(p), mp.mpmathify(q)
        num = mp.mpf(1)
        den = mp.mpf(1)
        for j in range(order + 1):
            for k in range(order + 1 - j):
                num *= 1 - p ** (j + 1) * q ** (k + 1) / z
                den *= 1 - z * p**j * q**k
        return complex(num / den)


def theta_pochhammer(z, n, p, q):
    """theta(z; p)_n built factor by factor from theta_series."""
    with mp.workdps(40):
        z, p, q = mp.mpmathify(z), mp.mpmathify(p), mp.mpmathify(q)
        if n == 0:
            return complex(1)
        acc = mp.mpf(1)
        if n > 0:
            for j in range(n):
                acc *= mp.mpmathify(theta_series(z * q**j, p))
        else:
            for j in range(1, -n + 1):
                acc /= mp.mpmathify(theta_series(z * q**-j, p))
        return complex(acc)
