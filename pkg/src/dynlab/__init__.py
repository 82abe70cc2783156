"""dynlab: a numerical laboratory for classic nonlinear-dynamics experiments.

Compute modules are pure and deterministic; the batch CLI lives in
``dynlab.cli`` and the live steering server in ``dynlab.server``.
"""

__version__ = "0.1.0"
