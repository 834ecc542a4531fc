"""Collects the one-line acceptance verdicts for the end-of-run summary."""

LINES: list[str] = []


def record(ok: bool, criterion: str, detail: str) -> str:
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] {criterion}: {detail}"
    LINES.append(line)
    print(line)
    return line
