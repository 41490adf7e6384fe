"""Deterministic IoT-enabled smart factory simulator.

Sense -> transmit -> process -> apply: machines with physical dynamics
feed calibrated sensors over a star pub/sub network into edge
preprocessing and cloud analytics, whose optimization policies close the
loop through actuator commands. Paired baseline/optimized runs under a
shared seed quantify energy, downtime and material-waste reductions.
"""

__version__ = "0.1.0"
