class Registry:
    items = []

    @classmethod
    def register(cls, item):
        cls.items.append(item)
        return cls

    @staticmethod
    def size():
        return len(Registry.items)


Registry.register("a").register("b")
print(Registry.size(), Registry.items)
