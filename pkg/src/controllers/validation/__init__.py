from .validation_controller import CheckResult, ValidationController, ValidationReport
