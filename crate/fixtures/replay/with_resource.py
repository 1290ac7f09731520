with open_session(dsn) as session:
    rows = session.query("select 1")
print(rows)
