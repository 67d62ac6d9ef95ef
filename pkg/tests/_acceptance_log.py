"""Shared registry so the acceptance tests can emit one PASS/FAIL line per
criterion in the terminal summary, regardless of pytest's capture settings."""

RESULTS: list[tuple[int, bool, str]] = []


def record(criterion: int, ok: bool, detail: str) -> str:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS.append((criterion, ok, detail))
    print(line, flush=True)
    return line
