"""Exception hierarchy shared by all modules."""


class StegoError(Exception):
    """Base class for every error raised by this package."""


class ParseError(StegoError, ValueError):
    pass


class MessageTooLong(StegoError, ValueError):
    pass


class CapacityExceeded(StegoError):
    """Mask has fewer valid slots than the expanded ciphertext needs."""


class MaskTooSmall(StegoError):
    pass


class AuthError(StegoError):
    """Tag mismatch: bits lost in inversion, wrong key, or tampering."""


class FrameError(StegoError):
    """Tag verified but the decrypted frame is malformed.

    A valid tag over a malformed frame means sender and receiver disagree on
    the record layout, which is a bug rather than channel noise.
    """


class FormatError(StegoError, ValueError):
    pass


class EmptySample(StegoError, ValueError):
    pass


class DegenerateLabels(StegoError, ValueError):
    pass
