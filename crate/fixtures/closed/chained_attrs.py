import os.path


class Node:
    def __init__(self):
        self.child = None


root = Node()
root.child = Node()
root.child.child = Node()
print(root.child.child.child, os.path.join("a", "b"))
