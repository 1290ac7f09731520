def placeholder():
    """Nothing happens here."""


class Marker:
    """Only a docstring."""


placeholder()
print(Marker.__doc__, placeholder())
