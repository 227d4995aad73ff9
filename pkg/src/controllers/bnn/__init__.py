from .bnn_controller import BnnController, BnnRunResult
