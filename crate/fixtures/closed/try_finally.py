log = []
try:
    log.append("body")
finally:
    log.append("cleanup")
print(log)
