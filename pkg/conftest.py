"""Pytest wiring for the absltest-based test modules.

absltest normally parses absl flags in absltest.main(); under pytest that
never runs, so mark the flags as parsed (with their defaults) up front.
"""

from absl import flags


def pytest_configure(config):
    if not flags.FLAGS.is_parsed():
        flags.FLAGS.mark_as_parsed()
