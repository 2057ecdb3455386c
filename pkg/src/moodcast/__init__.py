"""Next-day mood prediction from smartphone sensing logs.

Raw long-format logs are pivoted into per-user daily tables, pruned and
forward filled, then used by three predictors: a one-vs-one linear SVM over
mood classes, a per-user Elman RNN, and a persistence baseline.
"""

__version__ = "0.1.0"
