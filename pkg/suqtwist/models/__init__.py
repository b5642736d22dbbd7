from .common import (SuqtwistError, WindowError, WindowMismatchError,
                     BudgetExceededError, NotInIdealError, BasisIndex,
                     TruncationWindow, DeformationParameter, RunConfig)
from .words import (WordIndex, QuotientWord, TensorWordSum, IDENTITY,
                    GENERATORS, word_product, canonical_terms,
                    parse_generator_word)
from .report import (ReportError, ResidualReport, Report, Column, Table,
                     Verdicts, CSV_FIELDS, RESIDUAL_REPORT_SCHEMA_VERSION)
