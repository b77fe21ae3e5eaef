"""Exception types raised by the geospm library."""


class DomainError(ValueError):
    """A value lies outside the domain an operation accepts."""


class ConfigError(ValueError):
    """An experiment, layout or model configuration is malformed."""


class EstimabilityError(ValueError):
    """A contrast cannot be estimated from the design, or no degrees of freedom remain."""


class DatasetValidationError(ValueError):
    """One or more dataset rows violate the observation model.

    Attributes:
        report: list of (row_index, column, reason) tuples; row_index is 0-based,
            column is a variable name, 'x'/'y', or None for whole-row problems.
    """

    def __init__(self, report):
        self.report = list(report)
        lines = ['row %d%s: %s' % (row, '' if col is None else ', column %s' % col, reason) for row, col, reason in self.report[:20]]
        if len(self.report) > 20:
            lines.append('... and %d more' % (len(self.report) - 20))
        super().__init__('%d invalid row(s)\n  ' % len(self.report) + '\n  '.join(lines))


class ConvergenceError(RuntimeError):
    """An iterative solve or fit failed to converge.

    Attributes:
        diagnostics: dict with whatever the failing routine recorded.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
