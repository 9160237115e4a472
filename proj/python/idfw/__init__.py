"""Agentless identity-based firewall engine.

Thin wrapper over the native module: auth events go in, a concrete
first-match ruleset comes out of the compiler, and the simulated backend
answers packet queries against the installed generation.
"""

from ._idfw import *  # noqa: F401,F403
