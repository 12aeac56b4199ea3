class FloorplanError(Exception):
    """Base class for every error raised by this package"""


class ShapeError(FloorplanError, ValueError):
    """Array or image dimensions do not fit the requested operation"""


class ConfigError(FloorplanError, ValueError):
    """Malformed or out-of-range configuration value"""


class FormatError(FloorplanError, ValueError):
    """Input file does not follow the expected format"""


class UnknownSceneError(FloorplanError, KeyError):
    """Scene id was never registered in the latent table"""


class NonFiniteLossError(FloorplanError, ArithmeticError):
    """Training produced a NaN or infinite loss"""

    def __init__(self, message: str, checkpoint_path=None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path
