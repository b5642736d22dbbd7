"""
Residual report model.

A report is a flat list of check rows. Every row carries the measured
residual, the computed budget it is compared against and a verdict; the whole
report serializes to json (canonical) or to a csv projection of the rows.
"""

import abc
import csv
import datetime
import json
import logging
import re
from pprint import pformat

import numpy as np
import pytz

import suqtwist

log = logging.getLogger(__name__)

__all__ = [
    'ReportError',
    'ResidualReport',
    'Report',
    'Column',
    'Table',
]

# If/when the report layout changes, this needs to be changed using
# the semver model
RESIDUAL_REPORT_SCHEMA_VERSION = "1.0.0"


class Verdicts:
    PASS = "pass"
    FAIL = "fail"
    # exploratory rows without a ground truth, never gated
    MEASURED = "measured"

    ALL = (PASS, FAIL, MEASURED)


CSV_FIELDS = ("command", "q", "check", "anchor", "residual", "budget",
              "verdict", "ms")


class NumpyJsonEncoder(json.JSONEncoder):

    def default(self, obj):  # pylint: disable=E0202
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, np.ndarray) and obj.ndim == 1:
            return [float(x) for x in obj]
        # Let the base class default method raise the TypeError
        return json.JSONEncoder.default(self, obj)


def _to_json_with_encoder(d):
    return json.dumps(d, cls=NumpyJsonEncoder, sort_keys=True,
                      indent=4, separators=(',', ': '))


class ReportError(ValueError):
    pass


class BaseReportElement(metaclass=abc.ABCMeta):

    def __init__(self, id_):
        if not isinstance(id_, str):
            raise ReportError(
                "Type error. id '{i}' cannot be {t}.".format(i=id_, t=type(id_)))

        if not re.match('^[a-z0-9_]+$', id_):
            msg = "id '{i}' for {x} must contain only lower-case alphanumeric or underscore characters".format(
                x=self.__class__.__name__, i=id_)
            log.error(msg)
            raise ReportError(msg)

        self._id = id_
        self._ids = set([])

    def is_unique(self, id_):
        """
        Raise an error if an element with this id has already been added.
        """
        if id_ in self._ids:
            msg = "an element with id '{i}' has already been added to {t}.".format(
                i=id_, t=str(type(self)))
            log.error(msg)
            raise ReportError(msg)
        self._ids.add(id_)

    @property
    def id(self):
        return self._id

    @abc.abstractmethod
    def _get_attrs_simple(self):
        """
        Return a list of attribute names where each attribute returns a
        simple type like a string, int, float or a flat dict.
        The 'id' attribute should NOT be included.
        """
        raise NotImplementedError

    def to_dict(self):
        d = {a: getattr(self, a) for a in self._get_attrs_simple()}
        d['id'] = self.id
        return d


class ResidualReport(BaseReportElement):

    """
    One named check: residual against budget, with its verdict.

    The verdict is "pass" iff residual <= budget, unless the row is an
    exploratory measurement.
    """

    def __init__(self, check, command, q, residual, budget, anchor="",
                 params=None, ms=0.0, measured=False):
        BaseReportElement.__init__(self, check)
        self._command = command
        self._q = None if q is None else float(q)
        self._residual = float(residual)
        self._budget = float(budget)
        self._anchor = anchor
        self._params = dict(params or {})
        self._ms = float(ms)
        if measured:
            self._verdict = Verdicts.MEASURED
        elif self._residual <= self._budget:
            self._verdict = Verdicts.PASS
        else:
            self._verdict = Verdicts.FAIL

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, c=self.check, q=self.q,
                  r=self.residual, b=self.budget, v=self.verdict)
        return "<{k} {c} q:{q} residual:{r:.3e} budget:{b:.3e} {v} >".format(**_d)

    @property
    def check(self):
        return self.id

    @property
    def command(self):
        return self._command

    @property
    def q(self):
        return self._q

    @property
    def anchor(self):
        return self._anchor

    @property
    def params(self):
        return dict(self._params)

    @property
    def residual(self):
        return self._residual

    @property
    def budget(self):
        return self._budget

    @property
    def verdict(self):
        return self._verdict

    @property
    def ms(self):
        return self._ms

    @property
    def passed(self):
        return self._verdict == Verdicts.PASS

    @property
    def failed(self):
        return self._verdict == Verdicts.FAIL

    def with_timing(self, ms):
        return ResidualReport(self.check, self.command, self.q, self.residual,
                              self.budget, anchor=self.anchor,
                              params=self._params, ms=ms,
                              measured=self._verdict == Verdicts.MEASURED)

    def with_command(self, command):
        return ResidualReport(self.check, command, self.q, self.residual,
                              self.budget, anchor=self.anchor,
                              params=self._params, ms=self.ms,
                              measured=self._verdict == Verdicts.MEASURED)

    def sort_key(self):
        return (self.command or "", -1.0 if self.q is None else self.q, self.check)

    def _get_attrs_simple(self):
        return ['command', 'q', 'check', 'anchor', 'params', 'residual',
                'budget', 'verdict', 'ms']

    @staticmethod
    def from_dict(d):
        return ResidualReport(d['check'], d['command'], d['q'], d['residual'],
                              d['budget'], anchor=d.get('anchor', ""),
                              params=d.get('params'), ms=d.get('ms', 0.0),
                              measured=d['verdict'] == Verdicts.MEASURED)


class Column(BaseReportElement):

    """
    A column consists of an id, header, and list of values.
    """

    def __init__(self, id_, header=None, values=()):
        BaseReportElement.__init__(self, id_)
        self._header = header
        self._values = list(values)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__,
                  i=self.id,
                  h=self.header,
                  n=self.nvalues)
        return "<{k} id:{i} header:{h} nvalues:{n} >".format(**_d)

    @property
    def header(self):
        return self._header

    @property
    def nvalues(self):
        return len(self.values)

    @property
    def values(self):
        return self._values

    def _get_attrs_simple(self):
        return ['header', 'values']


class Table(BaseReportElement):

    """
    A table consists of an id, title, and list of columns.
    """

    def __init__(self, id_, title=None, columns=()):
        BaseReportElement.__init__(self, id_)
        self._title = title
        self._columns = []
        for column in columns:
            self.add_column(column)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__,
                  i=self.id,
                  t=self.title,
                  n=self.ncolumns)
        return "<{k} {i} title:{t} ncolumns:{n} >".format(**_d)

    @property
    def title(self):
        return self._title

    @property
    def ncolumns(self):
        return len(self.columns)

    @property
    def columns(self):
        return self._columns

    def _get_attrs_simple(self):
        return ['title']

    def get_column_by_id(self, id_):
        for col in self.columns:
            if col.id == id_:
                return col
        return None

    def add_column(self, column):
        if not isinstance(column, Column):
            raise TypeError(
                "Got type {x}. Expected Column type.".format(x=type(column)))

        BaseReportElement.is_unique(self, column.id)
        self._columns.append(column)

    def add_data_by_column_id(self, column_id, value):
        col = self.get_column_by_id(column_id)
        if col is None:
            raise KeyError("Unable to Column with id '{i}' to assign value {v}".format(
                i=column_id, v=value))
        col.values.append(value)

    def write_csv(self, stream, delimiter=',', float_format="{:.6e}"):
        for column in self.columns:
            if len(column.values) != len(self.columns[0].values):
                raise ValueError("Column lengths differ ({i} versus {j}".format(
                                 i=len(column.values),
                                 j=len(self.columns[0].values)))

        def _to_str(x):
            if x is None:
                return ""
            if not float_format or not isinstance(x, float):
                return str(x)
            return float_format.format(x)

        writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
        writer.writerow([c.header for c in self.columns])
        nrows = len(self.columns[0].values) if self.columns else 0
        for i in range(nrows):
            writer.writerow([_to_str(c.values[i]) for c in self.columns])

    def to_csv(self, file_name, delimiter=',', float_format="{:.6e}"):
        with open(file_name, "w") as csv_out:
            self.write_csv(csv_out, delimiter=delimiter, float_format=float_format)


class Report(BaseReportElement):

    """
    Container of residual rows plus the configuration that produced them.
    """

    def __init__(self, id_="residual_report", rows=(), config=None,
                 created_at=None):
        BaseReportElement.__init__(self, id_)
        self._rows = list(rows)
        self._config = dict(config or {})
        self._created_at = created_at or datetime.datetime.now(pytz.utc)

    def __repr__(self):
        _d = dict(k=self.__class__.__name__, i=self.id, n=len(self.rows),
                  s=self.summary)
        return "<{k} id:{i} nrows:{n} summary:{s} >".format(**_d)

    @property
    def rows(self):
        return sorted(self._rows, key=lambda r: r.sort_key())

    @property
    def config(self):
        return dict(self._config)

    @property
    def created_at(self):
        return self._created_at

    def add_row(self, row):
        if not isinstance(row, ResidualReport):
            raise TypeError(
                "Got type {x}. Expected ResidualReport type.".format(x=type(row)))
        self._rows.append(row)

    def add_rows(self, rows):
        for row in rows:
            self.add_row(row)

    @property
    def summary(self):
        d = {v: 0 for v in Verdicts.ALL}
        for row in self._rows:
            d[row.verdict] += 1
        return d

    @property
    def has_failures(self):
        return any(r.failed for r in self._rows)

    def get_rows_by_check(self, check):
        return [r for r in self.rows if r.check == check]

    def _get_attrs_simple(self):
        return []

    def to_dict(self):
        return dict(id=self.id,
                    created_at=self.created_at.isoformat(),
                    version=suqtwist.get_version(),
                    schema_version=RESIDUAL_REPORT_SCHEMA_VERSION,
                    config=self.config,
                    rows=[r.to_dict() for r in self.rows],
                    summary=self.summary)

    def to_json(self):
        """Return a json string of the report"""
        try:
            return _to_json_with_encoder(self.to_dict())
        except TypeError as e:
            msg = "Unable to serialize report due to {e} \n".format(e=e)
            log.error(msg)
            log.error("Object: " + pformat(self.to_dict()))
            raise

    def write_json(self, file_name):
        with open(file_name, 'w') as f:
            f.write(self.to_json())

    def to_table(self):
        columns = [Column(f, header=f) for f in CSV_FIELDS]
        table = Table("residual_rows", title="Residual checks", columns=columns)
        for row in self.rows:
            for f in CSV_FIELDS:
                table.add_data_by_column_id(f, getattr(row, f))
        return table

    def write_csv(self, file_name):
        self.to_table().to_csv(file_name)

    @staticmethod
    def merge(reports):
        """Concatenate the rows of several reports; config of the first wins"""
        report_id = reports[0].id
        rows = []
        for report in reports:
            if report.id != report_id:
                raise ReportError("Cannot merge report {a} into {b}".format(
                    a=report.id, b=report_id))
            rows.extend(report.rows)
        return Report(report_id, rows=rows, config=reports[0].config,
                      created_at=reports[0].created_at)
