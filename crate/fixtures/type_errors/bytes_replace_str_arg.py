d = self._read_pickle()
module = self.task_module
d = d.replace(module, b"")
print(len(d))
