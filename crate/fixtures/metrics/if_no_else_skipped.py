flag = False
if flag:
    print("never")
print("after")
