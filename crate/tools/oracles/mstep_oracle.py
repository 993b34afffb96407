"""Numerical maximiser of the expected complete-data log-likelihood of one
SAL component, used to freeze the M-step fixture.

For weights z_i and conditional moments a_i = E[W|x_i], b_i = E[1/W|x_i]
the objective (up to constants) is

    sum_i z_i [ -1/2 ln|S| - 1/2 b_i (x_i-m)' S^-1 (x_i-m)
                + a' S^-1 (x_i-m) - 1/2 a_i a' S^-1 a ]

maximised over (m, a, S) with S parameterised by its Cholesky factor.
"""
import json
import sys

import numpy as np
from scipy.optimize import minimize


def unpack(theta, p):
    mu = theta[:p]
    alpha = theta[p:2 * p]
    L = np.zeros((p, p))
    idx = 2 * p
    for i in range(p):
        for j in range(i + 1):
            L[i, j] = np.exp(theta[idx]) if i == j else theta[idx]
            idx += 1
    return mu, alpha, L


def neg_q(theta, x, z, a, b):
    p = x.shape[1]
    mu, alpha, L = unpack(theta, p)
    S = L @ L.T
    Si = np.linalg.inv(S)
    logdet = 2 * np.sum(np.log(np.diag(L)))
    d = x - mu
    quad = np.einsum("ij,jk,ik->i", d, Si, d)
    lin = d @ Si @ alpha
    aa = alpha @ Si @ alpha
    q = z * (-0.5 * logdet - 0.5 * b * quad + lin - 0.5 * a * aa)
    return -q.sum()


def solve(x, z, a, b):
    p = x.shape[1]
    theta0 = np.concatenate([x.mean(0), np.zeros(p), np.zeros(p * (p + 1) // 2)])
    best = None
    for method in ("BFGS", "Nelder-Mead", "BFGS"):
        start = theta0 if best is None else best.x
        opts = {"gtol": 1e-12, "maxiter": 100000} if method == "BFGS" else {
            "xatol": 1e-12, "fatol": 1e-14, "maxiter": 200000, "maxfev": 200000}
        r = minimize(neg_q, start, args=(x, z, a, b), method=method, options=opts)
        if best is None or r.fun <= best.fun:
            best = r
    mu, alpha, L = unpack(best.x, p)
    return mu, alpha, L @ L.T, best


def main():
    rng = np.random.default_rng(20240611)
    cases = []
    for case in range(4):
        n, p = 30, 2
        x = rng.normal(size=(n, p)) @ np.array([[1.0, 0.0], [0.4, 0.8]]) + rng.exponential(size=(n, 1)) * np.array([1.5, -0.5])
        w = rng.exponential(size=n) + 0.05
        a = w * (1.0 + rng.uniform(0.05, 0.6, size=n))
        b = (1.0 / w) * (1.0 + rng.uniform(0.05, 0.6, size=n))
        z = np.ones(n) if case < 2 else rng.uniform(0.05, 1.0, size=n)
        mu, alpha, sigma, r = solve(x, z, a, b)
        cases.append({
            "x": x.tolist(), "z": z.tolist(), "a": a.tolist(), "b": b.tolist(),
            "mu": mu.tolist(), "alpha": alpha.tolist(), "sigma": sigma.tolist(),
            "objective": -float(r.fun),
        })
        print(case, r.fun, np.linalg.norm(r.jac) if hasattr(r, "jac") and r.jac is not None else None, file=sys.stderr)
    json.dump({"cases": cases}, sys.stdout, indent=1)


if __name__ == "__main__":
    main()
