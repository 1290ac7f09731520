def risky():
    try:
        print("working")
        return 1 // 0
    finally:
        print("cleanup runs")


risky()
