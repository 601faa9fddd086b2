"""Regenerates specfun_oracle.csv from 50-digit series in mpmath.

Run: python3 specfun_oracle.py > specfun_oracle.csv
"""
from mpmath import mp, mpf, gamma, rf, factorial, sin, pi

mp.dps = 50


def direct_sum(term, start=0):
    # plain summation; series extrapolation misreads the zero terms of the Wright series at beta = 1/2
    total, j, small = mpf(0), start, 0
    while small < 10:
        t = term(j)
        total += t
        small = small + 1 if abs(t) < mpf(10) ** -45 * max(abs(total), mpf(10) ** -30) else 0
        j += 1
    return total


def ml(a, b, z):
    return direct_sum(lambda j: z**j / gamma(a * j + b))


def prabhakar(a, b, c, z):
    return direct_sum(lambda j: rf(c, j) * z**j / (factorial(j) * gamma(a * j + b)))


def wright_neg(beta, z):
    # W_{-beta,0}(-z)
    return direct_sum(lambda k: (-1) ** (k + 1) * z**k * sin(pi * beta * k) * gamma(1 + beta * k) / (pi * factorial(k)), 1)


ML = [
    (0.5, 1, -1), (0.5, 1, 0.5), (0.7, 1, -2), (0.7, 0.7, -1.5), (0.9, 1, -3),
    (0.9, 1.2, 2), (1.0, 1, -4), (0.3, 1, -0.5), (0.6, 1.6, -5), (0.8, 0.8, 1.5),
]
PRAB = [
    (0.5, 1, 2, -1), (0.7, 1, 3, -1), (0.7, 1.7, 0.5, -2), (0.9, 1, 1.5, 0.8), (0.6, 1.2, 2.5, -0.7),
    (0.8, 2.6, 4, -2.5), (0.4, 1, 1, -0.3), (1.0, 1, 2, -1.2), (0.95, 1.5, 3.5, -3), (0.5, 2, 0.7, 1.1),
]
WRIGHT = [
    (0.5, 0.5), (0.5, 1.5), (0.7, 0.3), (0.7, 1.0), (0.7, 2.0),
    (0.9, 0.4), (0.9, 1.0), (0.3, 0.8), (0.6, 1.2), (0.8, 0.6),
]

print("kind,a,b,c,z,value")
for a, b, z in ML:
    print(f"ml,{a},{b},,{z},{mp.nstr(ml(mpf(a), mpf(b), mpf(z)), 25)}")
for a, b, c, z in PRAB:
    print(f"prabhakar,{a},{b},{c},{z},{mp.nstr(prabhakar(mpf(a), mpf(b), mpf(c), mpf(z)), 25)}")
for beta, z in WRIGHT:
    print(f"wright,{beta},,,{z},{mp.nstr(wright_neg(mpf(beta), mpf(z)), 25)}")
