import pytest


def pytest_runtest_setup(item):
    for mark in item.iter_markers():
        if mark.name == "slow":
            pass
        elif mark.name in ("skipif", "parametrize", "hypothesis"):
            pass
        else:
            raise LookupError("Unknown pytest mark: '{}'".format(mark.name))
