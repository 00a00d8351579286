# tests/test_logging.py

import inspect

import pytest

from graetzmodes.errors import InvalidParameter
from graetzmodes.logging import get_logger, log_and_raise


def test_log_and_raise_uses_the_message_only():
    with pytest.raises(InvalidParameter) as excinfo:
        log_and_raise("Closure order must be non-negative", InvalidParameter, get_logger(__name__), order=-1)
    assert str(excinfo.value) == "Closure order must be non-negative"
    assert list(inspect.signature(log_and_raise).parameters) == [
        'message', 'exception_type', 'logger_instance', 'kwargs']
