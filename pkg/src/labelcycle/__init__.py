"""Semi-supervised corpus labeling toolkit.

Turns a small set of expert labels into corpus-wide labels by embedding
documents, clustering them, propagating unanimous cluster labels, and
queueing ambiguous clusters for human review — with cross-validated
accuracy reporting and inter-rater agreement measurement built in.
"""

__version__ = "0.1.0"
