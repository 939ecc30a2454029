"""Policy-gradient reinforcement learning on cart-pole, with a kinematic bicycle transfer harness."""

__version__ = "0.1.0"
