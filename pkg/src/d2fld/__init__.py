"""Drowsiness classification from 68-point facial landmark vectors.

A compact 1-D CNN (and an MLP baseline) over min-max scaled landmark
coordinates, with a from-scratch training engine, a size-budgeted binary
model format, a deterministic synthetic dataset generator, and a
train/eval/benchmark harness exposed through the ``d2fld`` CLI.
"""

__version__ = "0.1.0"
