"""Monte Carlo machinery for BV functions on pinned path spaces.

Signed-distance geometry, pinned Brownian bridge sampling, closed-form
first-passage laws, shell and two-window estimators, and a discretised
reflecting Ornstein-Uhlenbeck process with Skorokhod bookkeeping.
"""

__version__ = "0.1.0"
