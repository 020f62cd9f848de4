import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion id -> list of (label, passed)
ACCEPTANCE: dict[str, list[tuple[str, bool]]] = {}


def record(criterion: str, label: str, passed: bool) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((label, passed))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: (int(c.split("-")[0]), c)):
        rows = ACCEPTANCE[crit]
        ok = all(p for _, p in rows)
        failed = [label for label, p in rows if not p]
        detail = f"{len(rows)} checks" if ok else "failed: " + "; ".join(failed)
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} ({detail})")
