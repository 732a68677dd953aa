"""Shared pytest config.

Keeping a conftest at the tests root also puts this directory on sys.path,
so test modules can import the shared property_checks helpers.
"""
