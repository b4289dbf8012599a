"""Standalone scorer used to produce the frozen IRMA error values in the tests.

Written independently of ``rgbarcode.irma``: exact rational arithmetic, a
set-based hierarchy count, and a per-axis event scan. Run it directly to
print the table that ``tests/test_irma.py`` freezes.
"""
from fractions import Fraction

TRAINING = [
    "1121-120-200-700",
    "1121-127-700-500",
    "1123-127-500-000",
    "1121-120-310-700",
    "1121-115-700-400",
    "1124-410-620-625",
    "1121-230-942-700",
    "1122-120-200-700",
    "1121-127-722-500",
    "1123-211-500-000",
]

PAIRS = [
    ("1121-120-200-700", "1121-120-200-700"),
    ("1121-120-200-700", "2121-120-200-700"),
    ("1121-120-200-700", "9999-999-999-999"),
    ("1121-120-200-700", "****-***-***-***"),
    ("1121-120-200-700", "1122-120-200-700"),
    ("1121-120-200-700", "1123-120-200-700"),
    ("1121-120-200-700", "1131-120-200-700"),
    ("1121-120-200-700", "112*-120-200-700"),
    ("1121-120-200-700", "11**-120-200-700"),
    ("1121-120-200-700", "1121-127-200-700"),
    ("1121-120-200-700", "1121-1*0-200-700"),
    ("1121-120-200-700", "1121-120-700-700"),
    ("1121-120-200-700", "1121-120-210-700"),
    ("1121-120-200-700", "1121-120-2*9-700"),
    ("1121-127-700-500", "1121-127-722-500"),
    ("1121-127-700-500", "1123-127-500-000"),
    ("1124-410-620-625", "1121-120-200-700"),
    ("1123-127-500-000", "1123-211-500-000"),
    ("1121-230-942-700", "1121-2**-9*2-7*0"),
    ("1121-115-700-400", "1*21-115-700-401"),
]


def split(code):
    return code.lower().split("-")


def branch_counts(training):
    # prefix (axis, string) -> set of next characters
    children = {}
    for code in training:
        for a, axis in enumerate(split(code)):
            for i in range(len(axis)):
                children.setdefault((a, axis[:i]), set()).add(axis[i])
    return {k: len(v) for k, v in children.items()}


def axis_score(a, truth, pred, b):
    weights = []
    for i in range(len(truth)):
        if truth[i] == "*":
            break
        weights.append(Fraction(1, b.get((a, truth[:i]), 1) * (i + 1)))
    deltas = []
    event = None
    for i in range(len(weights)):
        if event is None:
            if pred[i] == "*":
                event = Fraction(1, 2)
            elif pred[i] != truth[i]:
                event = Fraction(1)
        deltas.append(event if event is not None else Fraction(0))
    full = sum(weights, Fraction(0))
    if full == 0:
        return Fraction(0)
    return Fraction(1, 4) * sum(w * d for w, d in zip(weights, deltas)) / full


def score(truth, pred, b):
    return sum(
        (axis_score(a, t, p, b) for a, (t, p) in enumerate(zip(split(truth), split(pred)))),
        Fraction(0),
    )


if __name__ == "__main__":
    b = branch_counts(TRAINING)
    for truth, pred in PAIRS:
        s = score(truth, pred, b)
        print(f'    ("{truth}", "{pred}", {float(s)!r}),  # {s}')
