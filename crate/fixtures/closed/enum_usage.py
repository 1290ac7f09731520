import enum


class Color(enum.Enum):
    RED = 1
    GREEN = 2


print(Color.RED, Color(2).name, [c.value for c in Color])
