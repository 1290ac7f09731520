expected = df[-df.a.isin(drop_idx.index)]
print(expected)
