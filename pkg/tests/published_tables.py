"""Confusion matrices as printed in the published results, transcribed by hand."""

TRAIN_ROWS = (5, 6, 7, 8)
TRAIN_COLS = (3, 4, 5, 6, 7, 8, 9)
TRAIN_COUNTS = (
    (0, 1, 4, 1, 0, 0, 0),
    (1, 2, 9, 71, 11, 4, 0),
    (0, 0, 0, 23, 313, 31, 2),
    (0, 0, 0, 0, 13, 79, 0),
)

TEST_ROWS = (6, 7, 8)
TEST_COLS = (3, 5, 6, 7, 8)
TEST_COUNTS = (
    (1, 2, 10, 2, 0),
    (0, 1, 5, 55, 3),
    (0, 0, 0, 5, 16),
)


def expand(rows, cols, counts):
    """(actuals, predictions) lists that reproduce a matrix."""
    actual, predicted = [], []
    for a, row in zip(rows, counts):
        for p, n in zip(cols, row):
            actual += [a] * n
            predicted += [p] * n
    return actual, predicted
