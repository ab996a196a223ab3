"""Suite registry and handlers for the checks."""

from .registry import Suite, SuiteRegistry
from .suites import RunContext, RunPoint, SuiteHandlers

__all__ = ["Suite", "SuiteRegistry", "RunContext", "RunPoint", "SuiteHandlers"]
