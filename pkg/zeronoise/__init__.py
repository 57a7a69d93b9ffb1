"""
Zero-noise laboratory for randomly perturbed intermittent circle maps.
"""

__version__ = 'v0.3.0'
