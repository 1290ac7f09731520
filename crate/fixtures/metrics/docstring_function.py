def documented():
    """Docstring only counts when called."""
    return 1


def never():
    """Never called."""
    return 2


print(documented())
