"""Collects one pass/fail line per acceptance criterion."""

LINES: list[str] = []


def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    LINES.append(line)
    print(line)
    return ok
