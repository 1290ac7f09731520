sources, cached = filter_cached(cache, sources)
print(len(sources), len(cached))
