"""Exception hierarchy shared by all socialcf modules."""


class SocialCFError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SocialCFError, ValueError):
    """Malformed input file. ``line`` is the 1-based physical line number."""

    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(message if line is None else f"line {line}: {message}")


class DuplicateRating(ParseError):
    """A (user, item) pair appears more than once."""


class UnknownUser(SocialCFError, KeyError):
    def __init__(self, user):
        self.user = user
        super().__init__(user)

    def __str__(self):
        return f"unknown user {self.user!r}"


class UnknownItem(SocialCFError, KeyError):
    def __init__(self, item):
        self.item = item
        super().__init__(item)

    def __str__(self):
        return f"unknown item {self.item!r}"


class EmptySupport(SocialCFError, ValueError):
    """A mean was requested over an empty item set."""


class InvalidK(SocialCFError, ValueError):
    """Cluster count outside ``1 <= k <= number of rated users``."""


class NotClustered(SocialCFError, LookupError):
    """The user belongs to no cluster (a cold-start user)."""

    def __init__(self, user):
        self.user = user
        super().__init__(f"user {user!r} is not in any cluster")


class ColdStartUnresolvable(SocialCFError):
    """A cold-start user has no clustered social neighbour."""

    def __init__(self, user):
        self.user = user
        super().__init__(f"user {user!r} has no clustered social neighbour")


class NotEvaluable(SocialCFError, ValueError):
    """Recall requested against an empty relevant set."""


class InvalidConfig(SocialCFError, ValueError):
    pass
