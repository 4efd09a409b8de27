"""RGBD mass estimation toolkit: synthetic dataset generation plus
multimodal (image + sparse point cloud) mass estimators."""

__version__ = "0.1.0"
