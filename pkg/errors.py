from __future__ import annotations

from numpy.linalg import LinAlgError


class DimensionError(ValueError):
    pass


class DegenerateInputError(ValueError):
    pass


class PoisonedInputError(ValueError):
    pass


class SingularMatrixError(LinAlgError):
    pass


class CapacityError(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


class DataFormatError(ValueError):
    def __init__(self, path, message: str, line: int | None = None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class ConfigError(ValueError):
    def __init__(self, path, message: str, line: int | None = None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class ExperimentError(RuntimeError):
    """Raised when a training run fails; carries where it failed."""

    def __init__(self, optimizer: str, run: int, epoch: int | None, batch: int | None, cause: BaseException):
        self.optimizer = optimizer
        self.run = run
        self.epoch = epoch
        self.batch = batch
        parts = [f"optimizer={optimizer}", f"run={run}"]
        if epoch is not None:
            parts.append(f"epoch={epoch}")
        if batch is not None:
            parts.append(f"batch={batch}")
        super().__init__(f"{' '.join(parts)}: {type(cause).__name__}: {cause}")
