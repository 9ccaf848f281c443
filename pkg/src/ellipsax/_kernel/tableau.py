"""Dormand-Prince 5(4) tableau with its quartic dense-output weights.

The classical coefficients, written as exact rationals so both backends
(and any reader with the literature open) agree digit for digit.  The
dense interpolant is

    y(t0 + theta*h) = y0 + h * sum_j k_j * (P[j,0]*theta + P[j,1]*theta^2
                                            + P[j,2]*theta^3 + P[j,3]*theta^4)

which reproduces y1 at theta = 1 and is 4th-order accurate inside the step.
"""

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])

A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
])

# 5th-order solution weights (the propagated solution)
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])

# embedded error weights: err = h * sum_j E[j] * k_j  (7 entries, k7 = f(t1, y1))
E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920,
              17253 / 339200, -22 / 525, 1 / 40])

# dense-output polynomial coefficients (rows: stages k1..k7)
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

for _arr in (C, A, B, E, P):
    _arr.setflags(write=False)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
ERROR_EXPONENT = -0.2  # 1 / -(order of the error estimator + 1)

# integrator status codes
STATUS_OK = 0
STATUS_BARRIER = 1
STATUS_UNDERFLOW = 2
STATUS_MAXSTEPS = 3
