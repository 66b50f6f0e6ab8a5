"""Exception hierarchy shared by all contexcert modules."""


class ContexcertError(Exception):
    """Base class for every error raised by this package."""
