"""Multi-authority policy-hiding ABE with a simulated governance ledger."""

__version__ = "0.1.0"
