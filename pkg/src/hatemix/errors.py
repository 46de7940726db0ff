"""Exception types shared across the toolkit."""


class UserInputError(Exception):
    """Raised for problems the user can fix: bad files, bad flags, bad data.

    The CLI maps this to exit code 2; everything else exits 1.
    """
