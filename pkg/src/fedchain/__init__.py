"""Federated PoS chains: ledger, beacon, consensus, cross-chain transfers, reward game, simulation."""
from .errors import FedChainError

__version__ = "0.1.0"
__all__ = ["FedChainError", "__version__"]
