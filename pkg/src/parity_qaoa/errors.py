"""Exception types shared across the toolkit."""


class LayoutError(ValueError):
    """Base class for layout validation failures."""


class LayoutParseError(LayoutError):
    """Layout document is structurally malformed."""


class OverlapError(LayoutError):
    """Two qubits occupy the same grid cell."""


class PlaquetteError(LayoutError):
    """A constraint's qubits do not fit a single 2x2 plaquette."""


class ParityViolationError(LayoutError):
    """A constraint's labels give some spin index an odd appearance count."""


class ResourceLimitError(RuntimeError):
    """Requested computation exceeds a configured size cap."""


class SynthesisError(RuntimeError):
    """Driver synthesis could not shape a kernel element into a connected line."""

    def __init__(self, message: str, qubit_ids: tuple[int, ...] = ()):
        super().__init__(message)
        self.qubit_ids = qubit_ids


class PriorityError(RuntimeError):
    """Preparation priorities cannot be assigned to every driver line."""


class BudgetInfeasibleError(ValueError):
    """Depth budget is below what the starting partition already needs."""


class DegenerateSpectrumError(ValueError):
    """Residual energy is undefined when E_max equals E_min."""
