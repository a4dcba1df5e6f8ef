"""Problem-gambling sign detection from forum posts.

Corpus store, length-matched sampling, blind annotation tooling and
service, TF-IDF / SMOTE feature balancing, a linear baseline and a
small transformer classifier, and a cross-validation harness.
"""

__version__ = "0.1.0"
