"""Coarse-to-fine pixel-aligned implicit occupancy reconstruction.

A small, deterministic numpy library that trains two stacked image-conditioned
occupancy predictors (a coarse one seeing the whole low-resolution image and a
fine one seeing high-resolution crops), extracts iso-surfaces with marching
cubes, and scores reconstructions against ground-truth meshes.  Everything
runs on the CPU from procedurally generated closed meshes; no GPU, no external
training data.
"""

__version__ = "0.1.0"
