"""Adversarial attacker/defender tournaments on a simulated distribution grid.

The package is organised in layers:

* :mod:`gridduel.spaces` - sensor/actuator value spaces shared by all layers.
* :mod:`gridduel.grid` - grid model, AC power flow, synthetic city networks.
* :mod:`gridduel.protection` - protection relays and cascading disconnection.
* :mod:`gridduel.ctf` - capture-the-flag coin scoring.
* :mod:`gridduel.reward` - voltage-band performance reward.
* :mod:`gridduel.environment` - the step/reset simulation facade agents play.
* :mod:`gridduel.agents` - strategies, mutators and the agent conductor.
* :mod:`gridduel.transport` - message envelopes and channel backends.
* :mod:`gridduel.experiment` - plans, run generation, execution, reporting.
* :mod:`gridduel.cli` - the ``gridduel`` command line front end.
"""

__version__ = "0.1.0"
