"""Compiled chain loop for the builtin target families.

Consumes the generator in exactly the order of ``kernels.step``:
TMCMC draws one normal (|z| is the epsilon draw) then ceil(d/53) uniforms whose
53-bit mantissas supply the sign bits; RWM draws d normals.  Both then draw d
uniforms for the update mask when gibbs_c < 1, and one uniform for the
accept/reject decision.
"""
import math

import numba
import numpy as np

TWO53 = 9007199254740992.0
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
LOG2 = math.log(2.0)


@numba.njit(cache=True, nogil=True)
def _marginal_logf(code, param, x):
    if code == 0:
        return -HALF_LOG_2PI - 0.5 * x * x
    elif code == 1:
        z = x / param
        return -HALF_LOG_2PI - math.log(param) - 0.5 * z * z
    elif code == 2:
        a = abs(x)
        return -a - 2.0 * math.log1p(math.exp(-a))
    elif code == 3:
        nu = param
        c = math.lgamma((nu + 1.0) / 2.0) - math.lgamma(nu / 2.0) - 0.5 * math.log(nu * math.pi)
        return c - (nu + 1.0) / 2.0 * math.log1p(x * x / nu)
    else:
        return -LOG2 - abs(x)


@numba.njit(cache=True, nogil=True)
def _log_density(x, family, mcode, mparam, thetas, lambdas, psicode, psiparam):
    d = x.size
    s = 0.0
    if family == 0:
        for j in range(d):
            th = thetas[j]
            s += math.log(th) + _marginal_logf(mcode, mparam, th * x[j])
    else:
        for j in range(d):
            z = x[j] / lambdas[j]
            s -= 0.5 * z * z
        if psicode == 1:
            p = 0.0
            for j in range(d):
                x2 = x[j] * x[j]
                p += x2 / (1.0 + x2)
            s -= psiparam * p
    return s


@numba.njit(cache=True, nogil=True)
def run_loop(rng, x, n_iters, kind, steps, gibbs_c,
             family, mcode, mparam, thetas, lambdas, psicode, psiparam,
             rec_idx, rec_states, accepted, jumps, record_jumps):
    d = x.size
    y = np.empty(d)
    nrec = rec_idx.size
    lp = _log_density(x, family, mcode, mparam, thetas, lambdas, psicode, psiparam)
    for t in range(n_iters):
        if kind == 0:
            e = abs(rng.standard_normal())
            i = 0
            while i < d:
                w = np.uint64(rng.random() * TWO53)
                b = 0
                while b < 53 and i < d:
                    if (w >> np.uint64(b)) & np.uint64(1):
                        y[i] = x[i] + e * steps[i]
                    else:
                        y[i] = x[i] - e * steps[i]
                    i += 1
                    b += 1
        else:
            for i in range(d):
                y[i] = x[i] + steps[i] * rng.standard_normal()
        if gibbs_c < 1.0:
            for i in range(d):
                if not rng.random() < gibbs_c:
                    y[i] = x[i]
        lq = _log_density(y, family, mcode, mparam, thetas, lambdas, psicode, psiparam)
        u = rng.random()
        acc = u < math.exp(min(0.0, lq - lp))
        jn = 0.0
        if acc:
            if record_jumps:
                for i in range(d):
                    diff = y[i] - x[i]
                    jn += diff * diff
                jn = math.sqrt(jn)
            for i in range(d):
                x[i] = y[i]
            lp = lq
        accepted[t] = acc
        jumps[t] = jn
        for r in range(nrec):
            rec_states[t, r] = x[rec_idx[r]]
