def helper(n):
    doubled = n * 2
    return doubled + offset


result = helper(3)
print(result)
