#!/usr/bin/env python3
"""Independent sanity solve of case118.m: dense Newton power flow with
numpy. Checks flat-start convergence, voltage band, and warm-start (DC
angles) iteration count. Development aid, not part of the test suite."""

import re
import numpy as np


def parse(path):
    text = open(path).read()
    text = re.sub(r"%.*", "", text)
    out = {}
    for name in ("bus", "gen", "branch"):
        m = re.search(r"mpc\." + name + r"\s*=\s*\[(.*?)\];", text, re.S)
        rows = []
        for row in m.group(1).split(";"):
            toks = row.split()
            if toks:
                rows.append([float(t) for t in toks])
        out[name] = np.array(rows)
    out["baseMVA"] = float(re.search(r"mpc\.baseMVA\s*=\s*([\d.]+)", text).group(1))
    return out


def ybus(mpc):
    bus, branch = mpc["bus"], mpc["branch"]
    n = len(bus)
    idx = {int(b[0]): i for i, b in enumerate(bus)}
    Y = np.zeros((n, n), complex)
    for br in branch:
        if br[10] <= 0:
            continue
        f, t = idx[int(br[0])], idx[int(br[1])]
        ys = 1 / (br[2] + 1j * br[3])
        bc = 1j * br[4] / 2
        tap = br[8] if br[8] else 1.0
        tapc = tap * np.exp(1j * np.deg2rad(br[9]))
        Y[f, f] += (ys + bc) / (tapc * np.conj(tapc))
        Y[f, t] += -ys / np.conj(tapc)
        Y[t, f] += -ys / tapc
        Y[t, t] += ys + bc
    for i, b in enumerate(bus):
        Y[i, i] += (b[4] + 1j * b[5]) / mpc["baseMVA"]
    return Y, idx


def newton(mpc, V0, tol=1e-3, maxit=30):
    bus, gen = mpc["bus"], mpc["gen"]
    base = mpc["baseMVA"]
    Y, idx = ybus(mpc)
    n = len(bus)
    types = bus[:, 1].astype(int)
    ref = np.where(types == 3)[0][0]
    pv = np.where(types == 2)[0]
    pq = np.where(types == 1)[0]
    pvpq = np.concatenate([pv, pq])

    S = -(bus[:, 2] + 1j * bus[:, 3]) / base
    for g in gen:
        if g[7] > 0:
            S[idx[int(g[0])]] += (g[1] + 1j * g[2]) / base

    V = V0.copy()
    for it in range(maxit + 1):
        mis = V * np.conj(Y @ V) - S
        F = np.concatenate([mis[pvpq].real, mis[pq].imag])
        if np.abs(F).max() < tol:
            return V, it, True
        if it == maxit:
            return V, it, False
        dS_dVm, dS_dVa = jac(Y, V)
        J11 = dS_dVa[np.ix_(pvpq, pvpq)].real
        J12 = dS_dVm[np.ix_(pvpq, pq)].real
        J21 = dS_dVa[np.ix_(pq, pvpq)].imag
        J22 = dS_dVm[np.ix_(pq, pq)].imag
        J = np.block([[J11, J12], [J21, J22]])
        dx = np.linalg.solve(J, -F)
        Va = np.angle(V)
        Vm = np.abs(V)
        Va[pvpq] += dx[: len(pvpq)]
        Vm[pq] += dx[len(pvpq):]
        V = Vm * np.exp(1j * Va)


def jac(Y, V):
    Ibus = Y @ V
    diagV = np.diag(V)
    diagI = np.diag(Ibus)
    diagVnorm = np.diag(V / np.abs(V))
    dS_dVm = diagV @ np.conj(Y @ diagVnorm) + np.conj(diagI) @ diagVnorm
    dS_dVa = 1j * diagV @ np.conj(diagI - Y @ diagV)
    return dS_dVm, dS_dVa


def main():
    mpc = parse("case118.m")
    bus, gen = mpc["bus"], mpc["gen"]
    n = len(bus)
    idx = {int(b[0]): i for i, b in enumerate(bus)}
    types = bus[:, 1].astype(int)
    ref = np.where(types == 3)[0][0]

    vg = np.ones(n)
    for g in gen:
        if g[7] > 0:
            vg[idx[int(g[0])]] = g[5]

    # flat start
    V0 = np.ones(n, complex)
    for i in range(n):
        if types[i] != 1:
            V0[i] = vg[i]
    V0[ref] = bus[ref, 7] * np.exp(1j * np.deg2rad(bus[ref, 8]))
    V, it, ok = newton(mpc, V0)
    print(f"flat start: converged={ok} iters={it} "
          f"vm range [{np.abs(V).min():.4f}, {np.abs(V).max():.4f}]")

    # DC angles for warm start
    branch = mpc["branch"]
    B = np.zeros((n, n))
    for br in branch:
        if br[10] <= 0:
            continue
        f, t = idx[int(br[0])], idx[int(br[1])]
        b = 1 / (br[3] * (br[8] if br[8] else 1.0))
        B[f, f] += b
        B[f, t] -= b
        B[t, f] -= b
        B[t, t] += b
    P = -bus[:, 2] / mpc["baseMVA"]
    for g in gen:
        if g[7] > 0:
            P[idx[int(g[0])]] += g[1] / mpc["baseMVA"]
    keep = [i for i in range(n) if i != ref]
    th = np.zeros(n)
    th0 = np.deg2rad(bus[ref, 8])
    rhs = P[keep] - B[np.ix_(keep, [ref])].ravel() * th0
    th[keep] = np.linalg.solve(B[np.ix_(keep, keep)], rhs)
    th[ref] = th0

    Vw = np.abs(V0) * np.exp(1j * th)
    V, it, ok = newton(mpc, Vw)
    print(f"warm start: converged={ok} iters={it} "
          f"vm range [{np.abs(V).min():.4f}, {np.abs(V).max():.4f}] "
          f"angle range deg [{np.rad2deg(np.angle(V)).min():.2f}, {np.rad2deg(np.angle(V)).max():.2f}]")


if __name__ == "__main__":
    main()
