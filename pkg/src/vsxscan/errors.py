"""Exception types shared across the scanner."""


class VsxScanError(Exception):
    """Base class for all scanner errors."""


class NotAnArchive(VsxScanError):
    """The path is neither a ZIP archive nor an unpacked extension directory."""


class ManifestMissing(VsxScanError):
    """The package contains no manifest entry."""


class ManifestUnparseable(VsxScanError):
    """The manifest exists but cannot be parsed, even leniently."""


class ParseError(VsxScanError):
    """A source file was rejected by the JavaScript grammar."""


class BudgetExceeded(VsxScanError):
    """Graph construction ran over its node-count or wall-time budget."""


class EmptyText(VsxScanError):
    """A data point's text is empty after normalization."""


class SingleClassData(VsxScanError):
    """Training data contains only one label class."""


class EmptyDataset(VsxScanError):
    """An operation requiring data received none."""


class EmptyCorpus(VsxScanError):
    """A corpus scan found no scannable packages under the root."""


class UnsupportedFormat(VsxScanError):
    """An unknown report output format was requested."""


class NetworkError(VsxScanError):
    """A retryable transport failure while talking to the gallery."""


class ProtocolError(VsxScanError):
    """The gallery returned a payload that does not match the protocol."""


class RateLimited(NetworkError):
    """The gallery asked us to back off."""

    def __init__(self, message: str, retry_after: float = 1.0):
        super().__init__(message)
        self.retry_after = retry_after


class ChecksumMismatch(VsxScanError):
    """A download's byte count disagrees with the declared content length."""


class MissingMetadata(VsxScanError):
    """Report extensions are absent from the metadata snapshot."""

    def __init__(self, missing_ids):
        self.missing_ids = sorted(missing_ids)
        super().__init__(f"no metadata for {len(self.missing_ids)} extension(s)")
