message = "%d records processed" % label
print(message)
