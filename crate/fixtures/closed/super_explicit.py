class A:
    def value(self):
        return 1


class B(A):
    def value(self):
        return super(B, self).value() + 10


class C(B):
    def value(self):
        return super().value() + 100


print(C().value())
