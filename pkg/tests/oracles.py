"""Frozen reference values, computed by hand or with closed forms outside the package."""
import numpy as np

# three-state benchmark (labels 0, 1, 2)
PI = np.array([0.2, 0.3, 0.5])
G_UNIFORM = np.full(3, 1.0 / 3.0)
IS_WEIGHTS = np.array([0.6, 0.9, 1.5])  # pi / g

# Metropolis-Hastings kernel for PI with a uniform proposal, entry by entry:
# from 0 every move is accepted; from 1 the move to 0 has a = 2/3;
# from 2 the moves to 0 and 1 have a = 2/5 and 3/5.
MH_KERNEL = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [2 / 9, 4 / 9, 1 / 3],
    [2 / 15, 1 / 5, 2 / 3],
])

# Geometric-weight benchmark: successes a = (0.2, 0.5, 0.8) and uniform g~.
# q must be proportional to a * w~ = (0.12, 0.45, 1.2); scaled so max q = 1.
GEO_SUCCESS = np.array([0.2, 0.5, 0.8])
GEO_ACCEPT = np.array([0.1, 0.375, 1.0])
GEO_EMBEDDED = np.array([0.04, 0.15, 0.40]) / 0.59  # g ∝ pi * a
GEO_KAPPA = 1.0 / 0.59
GEO_EPS = 0.2
GEO_MEAN_TRIALS = 2.95  # 1 / (kappa eps)

# mixture target with Cauchy(0, 10) trial
MIXTURE_MEAN = 20.0 / 3.0
MIXTURE_PDF_AT_5 = 0.1440340233418132  # (N(5;0,3) + N(5;5,1) + N(5;15,2)) / 3
W_STAR = 6.905
BOUND_AT_31_8 = 0.009998117677899945  # exp(-31.8 / 6.905)
EPS_EXP_MIXTURE = 0.1448225923244026  # 1 / 6.905

# renewal toy path
TOY_WEIGHTS = [0.5, 1.5, 2.0]
TOY_EPOCHS = [0.0, 0.5, 2.0, 4.0]
