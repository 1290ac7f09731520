class Base:
    def __init__(self, name):
        self.name = name

    def greet(self):
        return "hello " + self.name


class Child(Base):
    def __init__(self, name, age):
        super().__init__(name)
        self.age = age

    def greet(self):
        return super().greet() + " aged " + str(self.age)


print(Child("ada", 36).greet())
