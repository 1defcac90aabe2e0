"""Plain L-BFGS with backtracking-Armijo, written without the package.

Used as the fixed baseline that the opt-in modifications must not disturb.
The arithmetic is spelled out step by step so the trajectory can be compared
bit for bit.
"""
import numpy as np


def reference_lbfgs(fun, grad, x0, eps_rel=1e-5, eps_abs=1e-10, m=6, c1=1e-4,
                    max_ls=20, max_iter=0):
    x = np.array(x0, dtype=float)
    f = fun(x)
    g = grad(x)
    S, Y, RHO = [], [], []
    path = []
    k = 0
    while True:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= max(eps_abs, eps_rel * float(np.linalg.norm(x))):
            break
        if max_iter and k >= max_iter:
            break
        q = g.copy()
        a = np.empty(len(S))
        for i in range(len(S) - 1, -1, -1):
            a[i] = RHO[i] * (S[i] @ q)
            q -= a[i] * Y[i]
        gamma = float(S[-1] @ Y[-1]) / float(Y[-1] @ Y[-1]) if S else 1.0
        r = gamma * q
        for i in range(len(S)):
            b = RHO[i] * (Y[i] @ r)
            r += (a[i] - b) * S[i]
        d = -r
        dg0 = float(g @ d)
        if not dg0 < 0:
            S, Y, RHO = [], [], []
            d = -g
            dg0 = float(g @ d)
        step = 1.0 / gnorm if k == 0 else 1.0
        for _ in range(max_ls):
            xn = x + step * d
            fn = fun(xn)
            if fn <= f + c1 * step * dg0:
                break
            step *= 0.5
        else:
            raise RuntimeError("reference line search failed")
        gn = grad(xn)
        s, y = xn - x, gn - g
        if float(y @ s) > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            S.append(s)
            Y.append(y)
            RHO.append(1.0 / float(y @ s))
            if len(S) > m:
                S.pop(0), Y.pop(0), RHO.pop(0)
        x, f, g = xn, fn, gn
        k += 1
        path.append(x.copy())
    return x, f, path
