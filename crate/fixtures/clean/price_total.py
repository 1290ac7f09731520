total = sum(prices) * rate
print(round(total, 2))
