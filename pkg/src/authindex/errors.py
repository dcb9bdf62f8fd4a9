"""Exception hierarchy shared across the toolkit."""


class AuthIndexError(Exception):
    """Base class for all toolkit errors."""


class MissingFile(AuthIndexError):
    def __init__(self, path):
        super().__init__(f"file not found: {path}")
        self.path = str(path)


class UnsupportedFormat(AuthIndexError):
    def __init__(self, path, detail=""):
        msg = f"unsupported image format: {path}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.path = str(path)


class CorruptStream(AuthIndexError):
    def __init__(self, path, detail=""):
        msg = f"corrupt image stream: {path}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.path = str(path)


class DimensionMismatch(AuthIndexError):
    pass


class ImageTooSmall(AuthIndexError):
    pass


class ProviderUnavailable(AuthIndexError):
    pass


class InsufficientSamples(AuthIndexError):
    pass


class DegenerateObjective(AuthIndexError):
    pass


class NonDifferentiableInverter(AuthIndexError):
    pass


class EmptyCandidateSet(AuthIndexError):
    pass


class LiveInverterRequired(AuthIndexError):
    pass


class EmptyInput(AuthIndexError):
    pass


class ParseError(AuthIndexError):
    def __init__(self, line_no, detail):
        super().__init__(f"manifest parse error at line {line_no}: {detail}")
        self.line_no = line_no


class SchemaError(AuthIndexError):
    def __init__(self, field, line_no, detail=""):
        msg = f"manifest schema error at line {line_no}: field '{field}'"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.field = field
        self.line_no = line_no


class DuplicateId(AuthIndexError):
    def __init__(self, record_id, line_no):
        super().__init__(f"duplicate record id '{record_id}' at line {line_no}")
        self.record_id = record_id
        self.line_no = line_no
