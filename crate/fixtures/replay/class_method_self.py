def summary(self):
    parts = [self.name, str(self.size)]
    return " ".join(parts)


print(summary(self))
