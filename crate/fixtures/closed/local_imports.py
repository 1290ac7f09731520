def stats(values):
    import statistics

    return statistics.mean(values), statistics.median(values)


print(stats([1, 2, 3, 10]))
