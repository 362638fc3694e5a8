"""
array-pooling: optimal and robust configurations for square-array group testing.
"""

__version__ = "0.1.0"
