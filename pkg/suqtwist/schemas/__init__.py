import functools
import os

SCHEMA_REGISTRY = {}

__all__ = [
    'validate_residual_report',
    'is_valid_residual_report',
    'SCHEMA_REGISTRY',
]


def _load_schema(idx, name):
    try:
        try:
            from avro.schema import Parse as parse
        except ImportError:
            from avro.schema import parse
        d = os.path.dirname(__file__)
        schema_path = os.path.join(d, name)
        with open(schema_path, 'r') as f:
            schema = parse(f.read())
        SCHEMA_REGISTRY[idx] = schema
        return schema
    except ImportError:
        return None


RESIDUAL_REPORT_SCHEMA = _load_schema("residual_report", "residual_report.avsc")


def _validate(schema, msg, d):
    """Validate a python dict against a avro schema"""
    try:
        from avro.io import Validate as validate
    except ImportError:
        try:
            from avro.io import validate
        except ImportError:
            raise IOError("Unable to validate {m}, avro is not installed".format(m=msg))
    if schema is None or not validate(schema, d):
        raise IOError("Invalid {m} ".format(m=msg))
    return True


def _is_valid(schema, d):
    try:
        return _validate(schema, "", d)
    except IOError:
        return False


validate_residual_report = functools.partial(
    _validate, RESIDUAL_REPORT_SCHEMA, "Residual Report Model")
is_valid_residual_report = functools.partial(_is_valid, RESIDUAL_REPORT_SCHEMA)
