"""Hate-speech detection toolkit for code-mixed short texts.

Pipeline: corpus ingestion and encoding, skip-gram negative-sampling
embeddings, three sequence classifiers (CNN-1D, LSTM, BiLSTM) built on a
minimal reverse-mode autodiff engine, and a stratified cross-validation
harness with Precision/Recall/F-score/Accuracy reporting.
"""

__version__ = "0.1.0"
