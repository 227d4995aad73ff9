from mcp.server.fastmcp import FastMCP, Context
from typing import Optional, Dict, Any
import logging

from src.config import ExperimentConfig
from src.oracles.heat import AnalyticKernel

# Setup logger
logger = logging.getLogger(__name__)


def _create_success_response(message: str) -> Dict[str, Any]:
    """Create a standardized success response."""
    return {"status": "success", "message": message}


def _create_error_response(message: str) -> Dict[str, Any]:
    """Create a standardized error response."""
    return {"status": "error", "message": message}


def _load_config(
    experiment: str,
    config_path: Optional[str],
    seed: Optional[int],
    out_dir: Optional[str],
) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(config_path) if config_path else ExperimentConfig()
    return cfg.with_overrides(experiment=experiment, seed=seed, out_dir=out_dir)


def _handle_experiment(operation_name: str, run_func, *args, **kwargs) -> Dict[str, Any]:
    """Run an experiment and report its manifest status."""
    try:
        result = run_func(*args, **kwargs)
        if result is None:
            return _create_error_response(f"Failed to {operation_name.lower()}")
        manifest = result.manifest
        files = ", ".join(sorted(manifest.files))
        if manifest.status != "ok":
            return _create_error_response(
                f"{operation_name} finished with status '{manifest.status}': {manifest.error}"
            )
        return _create_success_response(
            f"{operation_name} completed in {manifest.duration_s:.1f}s; wrote {files}"
        )
    except Exception as e:
        logger.error(f"Experiment failed: {operation_name} - {str(e)}")
        return _create_error_response(f"Failed to {operation_name.lower()}: {str(e)}")


def _setup_oracle_tools(mcp: FastMCP, controller) -> None:
    """Setup closed-form heat kernel tools."""

    @mcp.tool("validate_oracles")
    def validate_oracles(ctx: Context, include_invariants: bool = True) -> Dict[str, Any]:
        """Run the oracle and invariant suites and return the report table."""
        try:
            report = controller.validation.run_validate(include_invariants=include_invariants)
            if report is None:
                return _create_error_response("Validation suite unavailable")
            table = report.format_table()
            if report.all_passed:
                return _create_success_response(table)
            failed = ", ".join(f"{c.suite}/{c.name}" for c in report.failures)
            return _create_error_response(f"Failed checks: {failed}\n{table}")
        except Exception as e:
            logger.error(f"Failed to run validation: {str(e)}")
            return _create_error_response(f"Failed to run validation: {str(e)}")

    @mcp.tool("heat_kernel_value")
    def heat_kernel_value(
        ctx: Context,
        t: float,
        x0: float,
        x: float,
        variant: str = "line-1d",
        radius: float = 1.0,
    ) -> Dict[str, Any]:
        """
        Evaluate a closed-form heat kernel.

        Args:
            t (float): Diffusion time (> 0)
            x0 (float): Source position (arc length on the circle)
            x (float): Target position
            variant (str): "line-1d" or "circle"
            radius (float): Circle radius
        """
        try:
            value = AnalyticKernel(variant, radius)(t, x0, x)
            return _create_success_response(f"k({t}, {x0}, {x}) = {float(value):.17g}")
        except Exception as e:
            logger.error(f"Failed to evaluate heat kernel: {str(e)}")
            return _create_error_response(f"Failed to evaluate heat kernel: {str(e)}")


def _setup_experiment_tools(mcp: FastMCP, controller) -> None:
    """Setup experiment runner tools."""

    @mcp.tool("run_toy1d")
    def run_toy1d(
        ctx: Context,
        config_path: Optional[str] = None,
        seed: Optional[int] = None,
        out_dir: Optional[str] = None,
    ) -> Dict[str, Any]:
        """Learn the 1-D heat kernel on uniform samples and compare with the closed form."""
        try:
            cfg = _load_config("toy1d", config_path, seed, out_dir)
        except Exception as e:
            return _create_error_response(f"Invalid configuration: {str(e)}")
        return _handle_experiment("Toy heat kernel run", controller.toy.run_toy1d, cfg)

    @mcp.tool("run_svgd_gauss")
    def run_svgd_gauss(
        ctx: Context,
        config_path: Optional[str] = None,
        seed: Optional[int] = None,
        out_dir: Optional[str] = None,
    ) -> Dict[str, Any]:
        """Run vanilla and heat-kernel SVGD on a Gaussian target."""
        try:
            cfg = _load_config("svgd-gauss", config_path, seed, out_dir)
        except Exception as e:
            return _create_error_response(f"Invalid configuration: {str(e)}")
        return _handle_experiment("SVGD Gaussian run", controller.svgd.run_svgd, cfg)

    @mcp.tool("run_gan2d")
    def run_gan2d(
        ctx: Context,
        config_path: Optional[str] = None,
        seed: Optional[int] = None,
        out_dir: Optional[str] = None,
    ) -> Dict[str, Any]:
        """Train a 2-D generator with a learned kernel."""
        try:
            cfg = _load_config("gan2d", config_path, seed, out_dir)
        except Exception as e:
            return _create_error_response(f"Invalid configuration: {str(e)}")
        return _handle_experiment("Generative run", controller.gan.run_gan2d, cfg)

    @mcp.tool("run_bnn")
    def run_bnn(
        ctx: Context,
        dataset_path: Optional[str] = None,
        config_path: Optional[str] = None,
        seed: Optional[int] = None,
        out_dir: Optional[str] = None,
    ) -> Dict[str, Any]:
        """
        Fit particle BNNs with the configured methods.

        Args:
            dataset_path (str): CSV with feature columns then the target; the
                configured synthetic dataset when omitted
        """
        try:
            cfg = _load_config("svgd-bnn", config_path, seed, out_dir)
        except Exception as e:
            return _create_error_response(f"Invalid configuration: {str(e)}")
        return _handle_experiment(
            "BNN regression run", controller.bnn.run_bnn, cfg, None, dataset_path
        )


def setup_mcp_tools(mcp: FastMCP, controller) -> None:
    """Register every tool on ``mcp``."""
    _setup_oracle_tools(mcp, controller)
    _setup_experiment_tools(mcp, controller)
