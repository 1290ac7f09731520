greeting = "Hello, {}!".format(user.display_name())
print(greeting.upper())
