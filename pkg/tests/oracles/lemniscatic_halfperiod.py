"""Real half-period of the lattice with invariants g2 = 4, g3 = 0.

Two independent routes:
  1. the period integral  omega = int_1^inf dt / sqrt(4 t^3 - 4 t),
  2. omega = pi / (2 * AGM(sqrt(e1 - e3), sqrt(e1 - e2)))  with
     e1 = 1, e2 = 0, e3 = -1 the roots of 4 t^3 - 4 t.

Both print 1.3110287771472457; tests freeze that value.
"""

import math

from scipy.integrate import quad


def period_integral() -> float:
    # t = 1/s^2 maps the infinite endpoint to s in (0, 1]:
    #   int_1^inf dt/sqrt(4t^3-4t) = int_0^1 ds / sqrt(1 - s^4)
    # and s = sin(phi) removes the endpoint singularity:
    #   ... = int_0^{pi/2} dphi / sqrt(1 + sin(phi)^2)
    val, err = quad(lambda phi: 1.0 / math.sqrt(1.0 + math.sin(phi) ** 2),
                    0.0, math.pi / 2.0, epsabs=1e-14, epsrel=1e-14)
    assert err < 1e-12
    return val


def agm(a: float, b: float) -> float:
    for _ in range(60):
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        if abs(a - b) < 1e-16 * a:
            break
    return 0.5 * (a + b)


def half_period_agm() -> float:
    return math.pi / (2.0 * agm(math.sqrt(2.0), 1.0))


if __name__ == "__main__":
    w1 = period_integral()
    w2 = half_period_agm()
    print(f"period integral : {w1!r}")
    print(f"AGM route       : {w2!r}")
    print(f"difference      : {abs(w1 - w2):.3e}")
