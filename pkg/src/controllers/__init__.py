"""
Controllers for the experiment suites.

This package contains one controller per suite:
- ToyController: 1-D heat kernel recovery against the closed form
- SvgdController: vanilla vs heat-kernel SVGD on a Gaussian target
- BnnController: particle Bayesian neural network regression
- GanController: 2-D generative training with a learned kernel
- ValidationController: oracle and invariant checks

The HeatKernelControllerFactory class (defined in `hk_controller.py`) builds
them lazily behind one object.
"""

# Import controllers so they can be imported from the controllers package
from .toy.toy_controller import ToyController
from .sampling.svgd_controller import SvgdController
from .bnn.bnn_controller import BnnController
from .gan.gan_controller import GanController
from .validation.validation_controller import ValidationController
