"""Exception types raised across the harmonium toolkit."""

from typing import List, Optional


class HarmoniumError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class ShapeError(HarmoniumError, ValueError):
    """Arrays do not match the declared model dimensions."""


class InvalidParamsError(HarmoniumError, ValueError):
    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("Invalid harmonium parameters: " + "; ".join(self.violations))


class RateOverflowError(HarmoniumError, ArithmeticError):
    def __init__(self, index: int, exponent: float, cap: float):
        self.index = int(index)
        self.exponent = float(exponent)
        self.cap = float(cap)
        super().__init__(
            f"Poisson log-rate for word {self.index} is {self.exponent:.4g}; "
            f"it must be finite and at most {cap:g}"
        )


class DivergenceError(HarmoniumError, RuntimeError):
    def __init__(self, message: str, iterations: int, observation: Optional[int] = None):
        self.iterations = iterations
        self.observation = observation
        where = f" (observation {observation})" if observation is not None else ""
        super().__init__(f"{message}{where} after {iterations} sweeps")


class BudgetExceededError(HarmoniumError, ValueError):
    def __init__(self, states: int, budget: int):
        self.states = states
        self.budget = budget
        super().__init__(f"Enumeration needs {states} states, budget is {budget}")


class TrainingError(HarmoniumError, RuntimeError):
    def __init__(self, message: str, epoch: int, component: Optional[str] = None):
        self.epoch = epoch
        self.component = component
        where = f" in {component}" if component else ""
        super().__init__(f"Epoch {epoch}{where}: {message}")


class CorpusFormatError(HarmoniumError, ValueError):
    def __init__(self, path, line_number: Optional[int], message: str):
        self.path = str(path)
        self.line_number = line_number
        where = f"{self.path}:{line_number}" if line_number is not None else self.path
        super().__init__(f"{where}: {message}")


class ModelFormatError(HarmoniumError, ValueError):
    """A model file could not be parsed or has the wrong shape."""


class ModelVersionError(ModelFormatError):
    """A model file declares an unsupported format version."""


class EvaluationError(HarmoniumError, ValueError):
    """Inputs to an evaluation routine are unusable (empty query, unseen label, ...)."""
