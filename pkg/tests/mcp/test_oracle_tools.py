import math

import pytest
from types import SimpleNamespace
from src.controllers.validation.validation_controller import CheckResult, ValidationReport
from src.mcp_tools import setup_mcp_tools, FastMCP

class DummyMCP(FastMCP):
    def __init__(self):
        super().__init__("heat-kernel-learning")
        self.tools = {}
    def tool(self, name):
        def decorator(fn):
            self.tools[name] = fn
            return fn
        return decorator

def _report(passed):
    return ValidationReport([CheckResult("line", "peak_t0.25", 0.0, 1e-12, passed)])

@pytest.fixture
def mcp_and_controller():
    controller = SimpleNamespace(
        validation=SimpleNamespace(run_validate=lambda include_invariants=True: _report(True))
    )
    mcp = DummyMCP()
    setup_mcp_tools(mcp, controller)
    return mcp, controller

def test_validate_oracles_success(mcp_and_controller):
    mcp, _ = mcp_and_controller
    res = mcp.tools["validate_oracles"](None, include_invariants=False)
    assert res["status"] == "success"
    assert "1/1 checks passed" in res["message"]

def test_validate_oracles_lists_failures(mcp_and_controller):
    mcp, controller = mcp_and_controller
    controller.validation.run_validate = lambda include_invariants=True: _report(False)
    res = mcp.tools["validate_oracles"](None)
    assert res["status"] == "error"
    assert "line/peak_t0.25" in res["message"]

def test_validate_oracles_placeholder(mcp_and_controller):
    mcp, controller = mcp_and_controller
    controller.validation.run_validate = lambda include_invariants=True: None
    assert mcp.tools["validate_oracles"](None)["status"] == "error"

@pytest.mark.parametrize("kwargs,expected", [
    ({"t": 0.25, "x0": 0.0, "x": 0.0}, 1.0 / math.sqrt(math.pi)),
    ({"t": 100.0, "x0": 0.0, "x": 1.0, "variant": "circle"}, 1.0 / (2.0 * math.pi)),
])
def test_heat_kernel_value(mcp_and_controller, kwargs, expected):
    mcp, _ = mcp_and_controller
    res = mcp.tools["heat_kernel_value"](None, **kwargs)
    assert res["status"] == "success"
    value = float(res["message"].split("=")[-1])
    assert value == pytest.approx(expected, rel=1e-6)

@pytest.mark.parametrize("kwargs", [
    {"t": 0.0, "x0": 0.0, "x": 1.0},
    {"t": 1.0, "x0": 0.0, "x": 1.0, "variant": "sphere"},
])
def test_heat_kernel_value_errors(mcp_and_controller, kwargs):
    mcp, _ = mcp_and_controller
    res = mcp.tools["heat_kernel_value"](None, **kwargs)
    assert res["status"] == "error"
    assert "message" in res
