import math

last_log_time = None
if get_logs:
    logs = read_pod_logs(pod)
    for line in logs:
        print(line)
    since_seconds = math.ceil((pendulum.now() - last_log_time).total_seconds())
    print(since_seconds)
