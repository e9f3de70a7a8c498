"""Exception types raised across the package."""


class GridBoundsError(ValueError):
    """A region does not fit inside the grid it is applied to."""


class ShapeMismatchError(ValueError):
    pass


class CoverageError(ValueError):
    """Some pixel is covered by no tile, so the weight map would contain zeros."""


class EstimatorError(RuntimeError):
    """Wraps a failure raised by a noise estimator while processing one tile."""

    def __init__(self, tile_index: int, cause: BaseException):
        super().__init__(f"estimator failed on tile {tile_index}: {cause!r}")
        self.tile_index = tile_index
        self.__cause__ = cause


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
