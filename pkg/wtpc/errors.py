class WtpcError(Exception):
    exit_code = 1

    def to_json(self):
        return {
            'error': type(self).__name__,
            'message': str(self),
            'exit_code': self.exit_code
        }


class DataError(WtpcError, ValueError):
    exit_code = 3


class DuplicateTimestampError(DataError):
    def __init__(self, timestamps):
        self.timestamps = list(timestamps)
        listed = ", ".join(str(t) for t in self.timestamps[:20])
        more = "" if len(self.timestamps) <= 20 else f" (and {len(self.timestamps) - 20} more)"
        super().__init__(f"duplicate timestamps: {listed}{more}")


class EmptyAfterCleaningError(DataError):
    def __init__(self, report):
        self.report = report
        super().__init__(
            f"empty after cleaning: all {report.raw} records were discarded")


class InsufficientDataError(DataError):
    exit_code = 8


class SchemaError(WtpcError, ValueError):
    exit_code = 4


class MissingColumnError(SchemaError):
    def __init__(self, columns, path=None):
        self.columns = list(columns)
        where = f" in {path}" if path else ""
        super().__init__(f"missing columns{where}: {', '.join(self.columns)}")


class FitError(WtpcError, RuntimeError):
    exit_code = 5


class RankDeficientError(FitError):
    def __init__(self, label, rank, n_params):
        self.rank = rank
        self.n_params = n_params
        super().__init__(
            f"rank-deficient design for {label}: rank {rank} < {n_params} parameters")


class ConvergenceError(FitError):
    exit_code = 6

    def __init__(self, label, objective, iterations):
        self.objective = objective
        self.iterations = iterations
        super().__init__(
            f"{label} did not converge after {iterations} iterations "
            f"(final objective {objective!r})")


class BandError(WtpcError, RuntimeError):
    exit_code = 7


class NoGaussianBandError(BandError):
    def __init__(self, alpha):
        self.alpha = alpha
        super().__init__(f"no Gaussian band at level alpha={alpha}")


class ArtifactError(WtpcError, FileNotFoundError):
    exit_code = 9


EXIT_CODES = [
    (0, 'success'),
    (1, 'unexpected error'),
    (2, 'usage error'),
    (DataError.exit_code, 'malformed or insufficient data'),
    (SchemaError.exit_code, 'schema mismatch'),
    (FitError.exit_code, 'model fit failed'),
    (ConvergenceError.exit_code, 'nonlinear solver did not converge'),
    (BandError.exit_code, 'no Gaussian band'),
    (InsufficientDataError.exit_code, 'insufficient data for the dynamic layer'),
    (ArtifactError.exit_code, 'missing or mismatching artifact'),
]
