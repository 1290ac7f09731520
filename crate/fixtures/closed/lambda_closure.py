adders = [lambda x, k=k: x + k for k in range(3)]
print([f(10) for f in adders])
compose = lambda f, g: lambda x: f(g(x))
print(compose(str, abs)(-4))
