"""Reference computations that share no code with the library.

Fusion is redone in exact rational arithmetic, special functions and losses
in mpmath at 40 digits, and the network forward pass with plain Python loops.
"""

from fractions import Fraction
import math

import mpmath as mp

mp.mp.dps = 40


# --- fusion, exact -------------------------------------------------------

def frac_opinion(beliefs, u):
    return [Fraction(str(b)) for b in beliefs], Fraction(str(u))


def ider_exact(o1, o2):
    """Raw masses, normalizer and normalized opinion, all as Fractions."""
    (b1, u1), (b2, u2) = o1, o2
    raw_b = [b1[k] * b2[k] + b1[k] * u2 + b2[k] * u1 + (b1[k] + b2[k]) / 2 for k in range(len(b1))]
    raw_u = u1 * u2 + (u1 + u2) / 2
    norm = sum(raw_b) + raw_u
    return raw_b, raw_u, norm, ([b / norm for b in raw_b], raw_u / norm)


def ds_exact(o1, o2):
    (b1, u1), (b2, u2) = o1, o2
    conflict = sum(b1[i] * b2[j] for i in range(len(b1)) for j in range(len(b2)) if i != j)
    scale = 1 - conflict
    beliefs = [(b1[k] * b2[k] + b1[k] * u2 + b2[k] * u1) / scale for k in range(len(b1))]
    return beliefs, u1 * u2 / scale, conflict


def conflict_exact(o1, o2):
    (b1, _), (b2, _) = o1, o2
    return sum(b1[i] * b2[j] for i in range(len(b1)) for j in range(len(b2)) if i != j)


def fold_exact(opinions):
    acc = opinions[0]
    for nxt in opinions[1:]:
        acc = ider_exact(acc, nxt)[3]
    return acc


# --- special functions and losses, mpmath ---------------------------------

def mp_digamma(x):
    return mp.digamma(mp.mpf(x))


def mp_loggamma(x):
    return mp.loggamma(mp.mpf(x))


def mp_total_loss(alpha, label, lam):
    a = [mp.mpf(x) for x in alpha]
    s = mp.fsum(a)
    ce = mp.digamma(s) - mp.digamma(a[label])
    at = list(a)
    at[label] = mp.mpf(1)
    st = mp.fsum(at)
    k = len(at)
    kl = (mp.loggamma(st) - mp.loggamma(k) - mp.fsum(mp.loggamma(x) for x in at)
          + mp.fsum((x - 1) * (mp.digamma(x) - mp.digamma(st)) for x in at))
    return ce + lam * kl


def fd_gradient(alpha, label, lam, step=1e-5):
    """Central differences of the mpmath loss."""
    out = []
    for k in range(len(alpha)):
        up = list(alpha)
        dn = list(alpha)
        up[k] = mp.mpf(alpha[k]) + step
        dn[k] = mp.mpf(alpha[k]) - step
        out.append(float((mp_total_loss(up, label, lam) - mp_total_loss(dn, label, lam)) / (2 * step)))
    return out


def kl_beta_to_uniform_quad(a, b):
    """KL(Beta(a, b) || Beta(1, 1)) by adaptive quadrature of f log f."""
    norm = mp.beta(a, b)

    def integrand(p):
        f = p ** (a - 1) * (1 - p) ** (b - 1) / norm
        return f * mp.log(f) if f > 0 else mp.mpf(0)

    return mp.quad(integrand, [0, 0.5, 1])


# --- network forward pass, plain Python ------------------------------------

def forward_evidence_loops(w1, b1, w2, b2, x):
    hidden = []
    for j in range(len(b1)):
        pre = b1[j] + sum(w1[j][i] * x[i] for i in range(len(x)))
        hidden.append(max(pre, 0.0))
    out = []
    for k in range(len(b2)):
        z = b2[k] + sum(w2[k][j] * hidden[j] for j in range(len(hidden)))
        out.append(math.log1p(math.exp(z)) if z < 30 else z + math.log1p(math.exp(-z)))
    return out


def nearest_mean_loops(rows, labels, means):
    hits = 0
    for row, y in zip(rows, labels):
        d = [sum((r - m) ** 2 for r, m in zip(row, mu)) for mu in means]
        hits += d.index(min(d)) == y
    return hits / len(labels)
