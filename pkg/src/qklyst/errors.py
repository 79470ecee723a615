"""Exception types shared by the library and mapped to CLI exit codes."""


class PhysicalValidityError(ValueError):
    """Parameters leave the regime the model is valid in (e.g. relativistic beam)."""


class ModelRangeError(ValueError):
    """A model output falls outside its admissible range.

    The offending raw value is kept on ``raw_value`` so callers can report it.
    """

    def __init__(self, message: str, raw_value: float):
        super().__init__(message)
        self.raw_value = raw_value
