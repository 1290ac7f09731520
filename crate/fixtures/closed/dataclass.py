from dataclasses import dataclass, field


@dataclass
class Item:
    name: str
    price: float = 0.0
    tags: list = field(default_factory=list)


item = Item("pen", 1.5)
item.tags.append("office")
print(item)
