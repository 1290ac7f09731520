class Countdown:
    def __init__(self, start):
        self._it = iter(range(start, 0, -1))

    def __iter__(self):
        return self

    def __next__(self):
        return next(self._it)


for n in Countdown(3):
    print(n)
total = sum(Countdown(4))
print(total)
