"""Black-box checking of reactive systems.

Learns a Mealy-machine approximation of a system under test, model-checks it
against a safety LTL / discrete-time STL specification at a bounded horizon,
and accelerates the loop by also model checking automatically strengthened
variants of the specification.
"""

__version__ = "0.1.0"
