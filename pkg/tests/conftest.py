def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", None) != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL", props.get("detail", "")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, verdict, detail in sorted(lines):
        terminalreporter.write_line(f"criterion {num}: {verdict}  {detail}")
