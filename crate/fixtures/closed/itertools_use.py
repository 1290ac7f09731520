import itertools

pairs = list(itertools.combinations("abc", 2))
chain = list(itertools.chain([1], [2, 3]))
acc = list(itertools.accumulate([1, 2, 3, 4]))
print(pairs, chain, acc)
