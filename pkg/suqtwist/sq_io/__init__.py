from .report import (load_report_from_json, load_report_from, dict_to_report,
                     write_report)
from .dump import dump_operator, load_operator_dump, OperatorDump
