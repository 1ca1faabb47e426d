"""Exception hierarchy shared by all fedchain modules."""


class FedChainError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FedChainError, ValueError):
    """An argument lies outside the mathematical domain of a formula."""


# ledger
class InvalidBlock(FedChainError):
    pass


class NoValidFork(FedChainError):
    pass


class InsufficientBalance(FedChainError):
    pass


class InsufficientAmount(FedChainError, ValueError):
    pass


# beacon
class NotCommitteeMember(FedChainError):
    pass


class RevealMismatch(FedChainError):
    pass


class PhaseError(FedChainError):
    """A commit arrived during the reveal phase or vice versa."""


class EmptyLedger(FedChainError):
    pass


class BeaconUnavailable(FedChainError):
    """The reveal quorum was not reached, so no seed exists for the epoch."""


# crosschain
class TxNotFound(FedChainError, LookupError):
    pass


class InvalidProof(FedChainError):
    pass


class ConflictingProof(FedChainError):
    pass


class UnknownOrigin(FedChainError):
    pass


# game
class InfeasibleProfile(FedChainError, ValueError):
    pass


class DegenerateOpponents(FedChainError):
    pass


class NonpositiveReward(FedChainError):
    pass


class BoundaryProfile(FedChainError, ValueError):
    pass


# sim / cli
class ConfigError(FedChainError, ValueError):
    pass
