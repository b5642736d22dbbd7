"""
Loading and writing residual reports
"""

import io
import json
import logging
import sys

import iso8601

from suqtwist.models.report import Report, ResidualReport, ReportError
from suqtwist.schemas import validate_residual_report


log = logging.getLogger(__name__)

__all__ = [
    "load_report_from_json",
    "load_report_from",
    "write_report",
]


def dict_to_report(dct, validate=True):
    # Use `load_report_from` instead.
    if validate:
        validate_residual_report(dct)
    rows = [ResidualReport.from_dict(d) for d in dct.get('rows', [])]
    created_at = dct.get('created_at')
    if created_at is not None:
        created_at = iso8601.parse_date(created_at)
    report = Report(dct['id'], rows=rows, config=dct.get('config', {}),
                    created_at=created_at)
    summary = dct.get('summary')
    if summary is not None and summary != report.summary:
        raise ReportError("Report summary {a} disagrees with its rows {b}".format(
            a=summary, b=report.summary))
    return report


def __load_json_or_dict(processor_func):
    def wrapper(json_path_or_dict):
        if isinstance(json_path_or_dict, dict):
            return processor_func(json_path_or_dict)
        else:
            with open(json_path_or_dict, 'r') as f:
                d = json.loads(f.read())
            return processor_func(d)
    return wrapper


def load_report_from(json_path_or_dict):
    """
    Load a Report from a raw dict or path to JSON file

    :param json_path_or_dict:
    :type json_path_or_dict: dict | str
    :rtype: Report
    """
    return __load_json_or_dict(dict_to_report)(json_path_or_dict)


def load_report_from_json(json_file):
    """Convert a report json file to Report instance."""
    return load_report_from(json_file)


def _render(report, output_format):
    if output_format == "json":
        s = report.to_json()
        # what goes out must load back
        validate_residual_report(json.loads(s))
        return s + "\n"
    if output_format == "csv":
        buf = io.StringIO()
        report.to_table().write_csv(buf)
        return buf.getvalue()
    raise ValueError("Unsupported report format '{f}'".format(f=output_format))


def write_report(report, output=None, output_format="json"):
    """Write the report to ``output``, or to stdout when output is None"""
    s = _render(report, output_format)
    if output is None:
        sys.stdout.write(s)
        sys.stdout.flush()
    else:
        with open(output, 'w') as f:
            f.write(s)
        log.info("Wrote {n} rows to {o} ({f})".format(n=len(report.rows), o=output,
                                                       f=output_format))
    return output
