from utils.error_handler import AppError, ErrorBoundary, InvariantViolation, handle_errors

__all__ = ['AppError', 'ErrorBoundary', 'InvariantViolation', 'handle_errors']
