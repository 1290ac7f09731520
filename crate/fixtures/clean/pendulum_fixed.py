import math

last_log_time = pendulum.now()
if get_logs:
    since_seconds = math.ceil((pendulum.now() - last_log_time).total_seconds())
    print(since_seconds >= 0)
