"""Exception hierarchy shared by every module.

Input problems (bad files, bad configs, broken invariants) derive from
``InputError``; numerical failures derive from ``NumericalError``.  The CLI
maps the two families onto distinct exit codes.
"""


class IdeaError(Exception):
    """Base class for all errors raised by this package."""


class InputError(IdeaError):
    pass


class NumericalError(IdeaError):
    pass


class ParseError(InputError):
    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class DuplicateIdError(InputError):
    def __init__(self, ids, where=""):
        self.ids = sorted(ids)
        suffix = f" in {where}" if where else ""
        super().__init__(f"duplicate movie id(s){suffix}: {', '.join(self.ids)}")


class DanglingIdError(InputError):
    def __init__(self, movie_id, library_id):
        self.movie_id = movie_id
        self.library_id = library_id
        super().__init__(f"anchor link references unknown movie {movie_id!r} in library {library_id!r}")


class CardinalityError(InputError):
    def __init__(self, movie_id, side):
        self.movie_id = movie_id
        self.side = side
        super().__init__(f"movie {movie_id!r} appears in more than one anchor link (side {side})")


class ConfigError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class EmptyInputError(InputError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, epoch, last_finite=None):
        self.epoch = epoch
        self.last_finite = last_finite
        msg = f"training diverged at epoch {epoch}"
        if last_finite is not None:
            msg += f"; last finite losses: {last_finite}"
        super().__init__(msg)


class InsufficientPairsError(InputError):
    pass
