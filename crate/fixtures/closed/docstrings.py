"""Module docstring."""


def documented(x):
    """Return x doubled."""
    return x * 2


class Documented:
    """Class docstring."""

    def method(self):
        """Method docstring."""
        return documented(5)


print(Documented().method(), documented.__doc__)
