"""Storage-rights toolkit: dispatch, nodal prices, congestion settlement and FTR/FSR feasibility."""

__version__ = "0.1.0"
