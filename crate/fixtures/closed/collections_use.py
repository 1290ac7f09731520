from collections import Counter, defaultdict, namedtuple

words = "a b a c b a".split()
counts = Counter(words)
groups = defaultdict(list)
for w in words:
    groups[w].append(w)
Pair = namedtuple("Pair", "left right")
print(counts.most_common(2), dict(groups), Pair(1, 2))
