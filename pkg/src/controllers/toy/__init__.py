from .toy_controller import ToyCheckpoint, ToyController, ToyResult
