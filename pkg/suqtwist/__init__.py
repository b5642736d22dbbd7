try:
    from importlib.metadata import version as _dist_version
    __VERSION__ = _dist_version('suqtwist')
except Exception:
    __VERSION__ = 'unknown'


def get_version():
    """Return the version as a string. "0.3.0"

    This uses a major.minor.tiny to be compatible with semver spec.
    """
    return __VERSION__
