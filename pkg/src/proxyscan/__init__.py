"""Static analysis of upgradeable proxy contracts in Solidity source."""

__version__ = "0.1.0"
