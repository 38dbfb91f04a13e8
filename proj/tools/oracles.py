#!/usr/bin/env python3
"""Independent reference values frozen into the unit tests.

Every number here is computed from first principles with mpmath, scipy or exact
rationals, never by calling the C++ library. Run it and compare with the constants
in tests/*.cpp after changing a model convention.
"""
from fractions import Fraction

import mpmath as mp
import numpy as np
from scipy.optimize import minimize_scalar

mp.mp.dps = 40

AMP, ETA, L, GAMMA = mp.mpf("0.0672"), mp.mpf("0.691"), mp.mpf("1.0064"), mp.mpf("0.12")


def out(name, v):
    print(f"{name} = {mp.nstr(mp.mpf(v), 17)}")


def overlap(a, b):
    return mp.exp(-abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + mp.conj(a) * b)


def model():
    a = AMP
    o1 = overlap(a, -a)
    o2 = overlap(a, 1j * a)
    out("overlap_pm", mp.re(o1))
    out("overlap_pi_abs", abs(o2))
    out("overlap_pi_arg", mp.arg(o2))
    mean = 2 * mp.sqrt(ETA) * a
    out("mean_x0", mean)
    out("phi_neg_mean", mp.ncdf(-mean))
    # six X bins: edges -inf, -L, -L/2, 0, L/2, L, inf; state +a in X and state -a in X
    edges = [-mp.inf, -L, -L / 2, 0, L / 2, L, mp.inf]
    pr = [mp.ncdf(edges[i + 1] - mean) - mp.ncdf(edges[i] - mean) for i in range(6)]
    # signed indices -3..-1, +1..+3; x = 0 scores +b for B = +b, x = 1 scores +b for B = -b
    sb = {-3: pr[0], -2: pr[1], -1: pr[2], 1: pr[3], 2: pr[4], 3: pr[5]}
    xs = {b: (sb[b] + sb[b]) / 4 for b in sb}  # x=1 mirrors x=0 exactly
    pm = mp.ncdf(-mean)  # P-basis: x=2 wrong sign or x=3 wrong sign
    p_neg = (pm + pm) / 4
    p_pos = (1 - pm) / 2
    om = {"-3X": xs[-3], "-2X": xs[-2], "-1X": xs[-1], "-1P": p_neg, "+3X": xs[3], "+2X": xs[2],
          "1-all": xs[1] + p_pos}
    for k, v in om.items():
        out(f"omega[{k}]", v)
    out("omega_sum", sum(om.values()))
    return om


def completeness():
    def kl(q, p):
        q, p = mp.mpf(q), mp.mpf(p)
        a = q * mp.log(q / p) if q > 0 else 0
        b = (1 - q) * mp.log((1 - q) / (1 - p)) if q < 1 else 0
        return a + b

    def F(n, p, k):
        q = mp.mpf(k) / n
        s = mp.sign(q - p)
        return mp.ncdf(s * mp.sqrt(2 * n * kl(q, p)))

    out("F(1e6,0.012,12240)", F(10 ** 6, mp.mpf("0.012"), 12240))
    n, g, w, d = 10 ** 6, mp.mpf("0.12"), mp.mpf("0.1"), mp.mpf("0.002")
    k = mp.floor(n * g * (w + d))
    out("eps_com(1e6,0.12,0.1,0.002)", 1 - F(n, g * w, k))
    out("kl(0.3,0.2)", kl("0.3", "0.2"))


def h2(p):
    return -p * mp.log(p, 2) - (1 - p) * mp.log(1 - p, 2)


def eat():
    ln2 = mp.log(2)

    def V(g, m, span):
        return ln2 / 2 * (mp.log(4 * m + 1, 2) + mp.sqrt(2 + 4 * (1 - g) ** 2 * span ** 2 / g)) ** 2

    def K(beta, g, m, span):
        s = mp.log(2 * m, 2) + 2 * (1 - g) * span
        return 1 / (6 * ln2 * (1 - beta) ** 3) * 2 ** (beta * s) * mp.log(2 ** s + mp.e ** 2) ** 3

    def xi(e2, m):
        return 2 * mp.log(1 + 4 * m, 2) * mp.sqrt(1 - 2 * mp.log(e2, 2))

    out("V(0.5,3,0)", V(mp.mpf("0.5"), 3, 0))
    out("V(0.12,3,1)", V(GAMMA, 3, 1))
    out("K(1e-12,g,1,0)", K(mp.mpf("1e-12"), GAMMA, 1, 0))
    out("K(0.3,0.12,3,2)", K(mp.mpf("0.3"), GAMMA, 3, 2))
    out("xi(0.5,1)", xi(mp.mpf("0.5"), 1))
    out("xi(2.5e-7,3)", xi(mp.mpf("2.5e-7"), 3))
    out("input_entropy(0.12)", h2(GAMMA) + 2 * GAMMA)
    out("ell_in(3e10)", 3 * 10 ** 10 * (h2(GAMMA) + 2 * GAMMA) + 3)
    out("ext_penalty(1e-6)", 2 * mp.log(10 ** 6, 2) - 2)

    # fixed synthetic certificate against the tabulated omega and delta fixture
    om = [mp.mpf(x) for x in ["0.0659", "0.0688", "0.0931", "0.2278", "0.0927", "0.0811", "0.3706"]]
    de = [mp.mpf(x) * mp.mpf("1e-5") for x in ["1.55", "1.58", "1.83", "2.85", "1.83", "1.71", "3.60"]]
    lam = [mp.mpf(x) for x in ["0.1", "0.3", "-0.2", "1.5", "0.0", "0.25", "0.4"]]
    alpha = mp.mpf("0.35")
    cmin = min(range(7), key=lambda c: (lam[c], c))
    tw = [om[c] + de[c] for c in range(7)]
    tw[cmin] = om[cmin] - (sum(de) - de[cmin])
    pg = alpha + sum(l * w for l, w in zip(lam, tw))
    h = 2 * (1 - GAMMA) * (1 - pg)
    span = max(lam) - min(lam)
    es = mp.mpf("4.99e-7")
    e1 = e2 = es / 4
    eEA, eext = mp.mpf("1e-6"), mp.mpf("1e-6")
    m = 3
    n = mp.mpf("3e10")

    def k(beta):
        return (n * (h + h2(GAMMA) + 2 * GAMMA) - n * (beta * V(GAMMA, m, span) + beta ** 2 * K(beta, GAMMA, m, span))
                - (1 - 2 * mp.log(eEA * e1, 2)) / beta - xi(e2, m) * mp.sqrt(n) - mp.log(2 / (es - e2 - 2 * e1), 2))

    out("synthetic_h", h)
    out("synthetic_k(beta=1e-5)", k(mp.mpf("1e-5")))

    def rnet(lb):
        b = mp.e ** lb
        return -float((k(b) - 2 * mp.log(1 / eext, 2) + 2 - (n * (h2(GAMMA) + 2 * GAMMA) + 3)) / n)

    r = minimize_scalar(rnet, bounds=(float(mp.log(1e-9)), float(mp.log(0.5))), method="bounded",
                        options={"xatol": 1e-12})
    out("synthetic_beta_opt", mp.e ** r.x)
    out("synthetic_rnet_cont", -r.fun)


def interval_reference():
    """Bernoulli(3/25) symbols from a fixed bit stream, exact rational interval algorithm."""
    g = Fraction(3, 25)
    state = [0x243F6A8885A308D3]

    def bit():
        state[0] = (6364136223846793005 * state[0] + 1442695040888963407) % (1 << 64)
        return state[0] >> 63

    lo, w, emitted, used, ts = Fraction(0), Fraction(1), 0, 0, []
    for _ in range(2000):
        if emitted >= 512:
            lo, w, emitted = Fraction(0), Fraction(1), 0
        while True:
            if lo + w <= 1 - g:
                lo, w = lo / (1 - g), w / (1 - g)
                ts.append(0)
                break
            if lo >= 1 - g:
                lo, w = (lo - (1 - g)) / g, w / g
                ts.append(1)
                break
            b = bit()
            used += 1
            w = w / 2
            lo = lo + b * w
        emitted += 1
    word = 0
    for t in ts[:64]:
        word = (word << 1) | t
    print(f"interval_first64 = 0x{word:016x}")
    print(f"interval_ones_2000 = {sum(ts)}")
    print(f"interval_bits_2000 = {used}")


def toeplitz_reference():
    rng = np.random.default_rng(11)
    r = rng.integers(0, 2, 40)
    s = rng.integers(0, 2, 40 + 9 - 1)
    ell = 9
    z = [(sum(int(s[j - i + ell - 1]) & int(r[j]) for j in range(40)) & 1) for i in range(ell)]
    print("toeplitz_r =", "".join(map(str, r)))
    print("toeplitz_s =", "".join(map(str, s)))
    print("toeplitz_z =", "".join(map(str, z)))


def mzm():
    s = mp.mpf("0.35") / (mp.mpf("1.5") * mp.pi)

    def arm(p):
        return mp.sqrt(1 - s * abs(p)) * mp.exp(1j * p)

    def field(p1, r, bias):
        return (arm(p1) + arm(r * p1) * mp.exp(1j * bias)) / 2

    f = field(mp.mpf("1.0"), mp.mpf("0.6"), mp.mpf("0.7"))
    out("mzm_I(1,0.6,0.7)", abs(f) ** 2)
    out("mzm_phase(1,0.6,0.7)", mp.arg(f))
    out("arm_power(1.5pi)", abs(arm(mp.mpf("1.5") * mp.pi)) ** 2)


def lcg_matrix(seed, n):
    """Symmetric matrix with entries in [-1, 1) from the 64-bit LCG the tests also use."""
    s = seed
    C = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            s = (6364136223846793005 * s + 1442695040888963407) % (1 << 64)
            C[i, j] = C[j, i] = (s >> 11) * 2.0 ** -53 * 2 - 1
    return C


def sdp_reference():
    import cvxpy as cp
    for seed in (1, 2, 3):
        C = lcg_matrix(seed, 10)
        X = cp.Variable((10, 10), symmetric=True)
        prob = cp.Problem(cp.Maximize(cp.trace(C @ X)), [X >> 0, cp.diag(X) == 1])
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
        print(f"maxcut_sdp[{seed}] = {prob.value:.12f}")
        print(f"lambda_max[{seed}] = {np.linalg.eigvalsh(C)[-1]:.15f}")


if __name__ == "__main__":
    model()
    completeness()
    eat()
    interval_reference()
    toeplitz_reference()
    mzm()
    sdp_reference()
