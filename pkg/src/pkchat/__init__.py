"""pkchat: pointer-guided, knowledge-grounded dialogue at desk scale."""

__version__ = "0.1.0"
