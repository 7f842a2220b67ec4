"""Independent reference values for the unit tests.

Kernels are built by brute-force enumeration of ordered scan sequences and
spin outcomes (no dynamic programming), in 40-digit arithmetic.
Run: python3 tests/oracles/generate.py
"""
import itertools

import mpmath as mp
import numpy as np
from scipy import stats

mp.mp.dps = 40


def p_plus(beta, x):
    return (1 + mp.tanh(beta * x)) / 2


def lumped_row(n, k, beta, m):
    """P(m -> m') for one scan step, enumerating every ordered k-subset and outcome."""
    start = [1] * m + [-1] * (n - m)
    row = [mp.mpf(0)] * (n + 1)
    orders = list(itertools.permutations(range(n), k))
    w_order = mp.mpf(1) / len(orders)
    for order in orders:
        for outcome in itertools.product((1, -1), repeat=k):
            cfg = list(start)
            prob = w_order
            for v, s in zip(order, outcome):
                field = (sum(cfg) - cfg[v]) / mp.mpf(n)
                q = p_plus(beta, field)
                prob *= q if s == 1 else 1 - q
                cfg[v] = s
            row[cfg.count(1)] += prob
    return row


def lumped_kernel(n, k, beta):
    return [lumped_row(n, k, beta, m) for m in range(n + 1)]


def fold_row(row, n):
    out = [mp.mpf(0)] * (n + 1)
    for m2, x in enumerate(row):
        out[m2 if 2 * m2 >= n else n - m2] += x
    return out


def stationary(n, beta, restricted=False):
    w = [mp.binomial(n, m) * mp.e ** (beta * (2 * m - n) ** 2 / (2 * mp.mpf(n))) for m in range(n + 1)]
    z = sum(w)
    w = [x / z for x in w]
    return fold_row(w, n) if restricted else w


def birth_death_kernel(n, beta):
    K = np.zeros((n + 1, n + 1))
    for m in range(n + 1):
        down = m / n * float(1 - p_plus(beta, mp.mpf(2 * m - n - 1) / n)) if m > 0 else 0.0
        up = (n - m) / n * float(p_plus(beta, mp.mpf(2 * m - n + 1) / n)) if m < n else 0.0
        if m > 0:
            K[m, m - 1] = down
        if m < n:
            K[m, m + 1] = up
        K[m, m] = 1.0 - down - up
    return K


def tmix(K, mu, starts, eps=0.25, t_max=10**6):
    dists = [np.eye(len(mu))[s] for s in starts]
    for t in range(t_max):
        d = max(0.5 * np.abs(x - mu).sum() for x in dists)
        if d <= eps:
            return t
        dists = [x @ K for x in dists]
    raise RuntimeError("no crossing")


def fmt(x):
    return mp.nstr(x, 17, min_fixed=-3, max_fixed=3)


def main():
    print("p_plus(1, 0.5) =", fmt(p_plus(1, mp.mpf("0.5"))))
    print("stationary n=2 beta=1 =", [fmt(x) for x in stationary(2, 1)])
    print("stationary n=7 beta=0.6 =", [fmt(x) for x in stationary(7, mp.mpf("0.6"))])

    for n, k, beta in [(5, 2, "0.7"), (6, 3, "1.3")]:
        K = lumped_kernel(n, k, mp.mpf(beta))
        print(f"lumped n={n} k={k} beta={beta}")
        for m, row in enumerate(K):
            print(f"  m={m}:", ", ".join(fmt(x) for x in row))
    K = lumped_kernel(5, 2, mp.mpf("1.5"))
    print("restricted n=5 k=2 beta=1.5")
    for m in range(3, 6):
        print(f"  m={m}:", ", ".join(fmt(x) for x in fold_row(K[m], 5)))

    for beta in ["0.5", "1"]:
        K = birth_death_kernel(20, mp.mpf(beta))
        mu = np.array([float(x) for x in stationary(20, mp.mpf(beta))])
        print(f"tmix n=20 k=1 beta={beta} =", tmix(K, mu, [20]))
    K = np.array([[float(x) for x in r] for r in lumped_kernel(12, 3, mp.mpf("0.5"))])
    mu = np.array([float(x) for x in stationary(12, mp.mpf("0.5"))])
    print("tmix n=12 k=3 beta=0.5 =", tmix(K, mu, [12]))
    Kf = np.array([[float(x) for x in fold_row(r, 12)] for r in lumped_kernel(12, 2, mp.mpf("1.5"))])
    muf = np.array([float(x) for x in stationary(12, mp.mpf("1.5"), restricted=True)])
    print("tmix restricted n=12 k=2 beta=1.5 =", tmix(Kf, muf, [6, 12]))

    for beta in ["1.2", "1.5", "2", "3"]:
        b = mp.mpf(beta)
        s = mp.findroot(lambda s: mp.tanh(b * s) - s, 0.9)
        print(f"s_star({beta}) =", fmt(s))

    counts = [18, 25, 31, 14, 12]
    probs = [0.2, 0.25, 0.3, 0.15, 0.1]
    chi = stats.chisquare(counts, [p * sum(counts) for p in probs])
    print("chisquare stat/p =", repr(chi.statistic), repr(chi.pvalue))


if __name__ == "__main__":
    main()
