from .svgd_controller import SamplingOutcome, SvgdController, SvgdResult
