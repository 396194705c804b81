import pytest

from juggler_mab.domain import (
    ArmSpace,
    Context,
    Dataset,
    DatasetHeader,
    Item,
    JugglerPrediction,
    SearchRecord,
)

VOCAB = {"brand": ("A", "B"), "device": ("mobile", "desktop"), "geo": ("city", "neighborhood", "resort")}

_ACCEPTANCE_LINES: list[str] = []


def make_record(scores, labels, *, search_id="s0", day=0, juggler=(1.0, 0.5),
                context=("A", "mobile", "city"), attributes=None):
    """Hand-built search record; ``scores`` is a list of (utility, compensation)."""
    items = tuple(
        Item(f"i{k}", float(u), float(c), int(lab), (attributes[k] if attributes else {}))
        for k, ((u, c), lab) in enumerate(zip(scores, labels))
    )
    return SearchRecord(search_id, day, Context(*context), JugglerPrediction(*juggler), items)


def make_dataset(records, vocab=VOCAB):
    days = max(r.day_index for r in records) + 1
    return Dataset(DatasetHeader(vocab=vocab, days=days), tuple(records))


@pytest.fixture
def vocab():
    return VOCAB


@pytest.fixture
def arm_space():
    return ArmSpace()


@pytest.fixture
def acceptance_report():
    def report(number: int, description: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {description}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
