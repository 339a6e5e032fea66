"""Exception types shared across the package.

Contract-level failures (everything under ContractError) are recoverable:
the ledger charges gas for the attempt and marks the transaction failed.
Infrastructure failures (storage, queries, device polls) propagate to the
caller that issued the operation.
"""


class FogchainError(Exception):
    """Base class for every error raised by this package."""


# --- transaction / contract failures -------------------------------------

class ContractError(FogchainError):
    """A contract rejected an operation. Gas is still charged."""


class InvalidRegistration(ContractError):
    pass


class DuplicateDevice(ContractError):
    pass


class UnknownDevice(ContractError):
    pass


class UnknownPolicy(ContractError):
    pass


class InvalidPolicy(ContractError):
    pass


class BatchTooLarge(ContractError):
    pass


class NonMonotonicWindow(ContractError):
    pass


class PayloadMismatch(ContractError):
    """Transaction payload bytes do not encode the declared arguments."""


class OversizedTransaction(FogchainError):
    """Intrinsic gas alone exceeds the block gas limit; rejected at submit."""


# --- storage --------------------------------------------------------------

class NotFound(FogchainError):
    """No object stored under the requested content hash."""


class StorageFull(FogchainError):
    """Content store capacity would be exceeded by this put."""


# --- time series ----------------------------------------------------------

class InvalidRange(FogchainError):
    """Range query with from > to."""


class WindowNotClosed(FogchainError):
    """Drain requested for a window that has not fully elapsed."""


class AlreadyDrained(FogchainError):
    """Drain requested twice for the same (device, window)."""


# --- device gateway -------------------------------------------------------

class DeviceTimeout(FogchainError):
    """Simulated device was unreachable for this poll."""


class UnknownAttribute(FogchainError):
    """Poll requested an attribute the device does not expose."""


class MissingArchive(FogchainError):
    """An anchored window hash has no matching object in the content store."""
