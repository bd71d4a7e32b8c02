import os
from typing import Optional

OUTPUT_DIR_ENV = "TIMESCALE_SIR_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "sir_output"


class TimescaleSirSettings:
    """A ghost loaded class that holds the numerical defaults and output location.

    The output directory is only resolved from the environment on first access,
    so changing TIMESCALE_SIR_OUTPUT_DIR before the first run is honoured.
    """

    def __init__(
        self,
        default_step: float = 1e-3,
        default_horizon: float = 500.0,
        max_workers: Optional[int] = None,
    ):
        self._output_dir = None
        self.default_step = default_step
        self.default_horizon = default_horizon
        self.max_workers = max_workers

    @property
    def output_dir(self) -> str:
        if not self._output_dir:
            self._load_output_dir()

        return self._output_dir

    @output_dir.setter
    def output_dir(self, value: str):
        self._output_dir = value

    def _load_output_dir(self):
        """Reads the output directory from the environment."""
        self._output_dir = os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR

    def reset(self):
        """Forgets the resolved output directory so the environment is read again."""
        self._output_dir = None


# Ghost loaded instance shared by the runner and the CLI
settings = TimescaleSirSettings()
