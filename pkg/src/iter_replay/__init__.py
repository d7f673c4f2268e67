"""Symmetry-based experience replay for goal-conditioned reinforcement learning.

Kaleidoscope replay mirrors observed trajectories across vertical planes
before they are stored; goal-augmented replay relabels sampled transitions
with goals drawn from a ball around achieved states.
"""

__version__ = "0.1.0"
