class Bank:
    rate = 0.05

    def __init__(self):
        self.balance = 100

    def grow(self, years):
        for _ in range(years):
            self.balance *= 1 + Bank.rate
        return round(self.balance, 2)


print(Bank().grow(3))
