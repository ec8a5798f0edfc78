"""
neflow: Nash-equilibrium seeking dynamics for networked integrator agents
with internal-model disturbance rejection.
"""

__version__ = "0.1.0"
