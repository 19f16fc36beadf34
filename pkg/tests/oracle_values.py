"""Reference values computed once with mpmath at 40 significant digits.

test_oracles.py recomputes each of them, so a drift in either place shows up.
"""

PHI1_T1 = 2.1565176427496657  # alpha = lambda = 1, T = 1
MINIMIZER_MID = 0.32402713683194270  # alpha = z = 1, T = 2, t = 1
MODE_COST_T2 = 1.0186573603637740  # alpha = lambda = z = 1, T = 2
TOTAL_RATE_11 = 6.0186578105045236  # z = (1, 1), alpha = (1, 4), T = 2
STEP_ONE = 1.0099501662508319  # alpha = 1, h = 0.01, x = 1, f = 2, eps = 0
SCHEME1_F2 = 0.90737731514554804  # M = 10, z1 = 0.5, T = 2, t = 1, x1 = 0.3, L = 1
SCHEME1_F2_NUM = 0.15181634313986245
SCHEME1_F2_DEN = 0.96466471676338731
MOLLIFY_U = 0.68673831248177717  # F = (1, 2), delta = 1
MOLLIFY_RHO1 = 0.73105857863000488
TAIL_SUM_100 = 0.19950124998177191  # sum_{k > 100} k^-1.5

# alpha = (1, a2), lambda = (1, 2): root of phi_1 = phi_2
CROSSING_A2_12 = 0.34638973140773900
CROSSING_A2_9 = 0.80471711296004695

# single mode, alpha = lambda = L = 1, eps = 0.3, T = 2, no control:
# exit probability from 10^5 paths at 10^4 steps (seed 99) and its standard error
DENSE_EXIT_PROB = 0.08464
DENSE_EXIT_SE = 0.00088021
