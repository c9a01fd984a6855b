class InputError(ValueError):
    """Invalid argument: bad letter index, unknown vertex, malformed path, ..."""


class MalformedPathError(InputError):
    pass


class ConfigError(InputError):
    def __init__(self, message, *, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class ResourceError(RuntimeError):
    """A configured cap (vertices, expansions, ...) would be exceeded."""

    def __init__(self, message, *, cap=None, partial=None):
        super().__init__(message)
        self.cap = cap
        self.partial = partial
