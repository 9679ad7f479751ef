"""Run reports, resource metrics and matrix export."""

from .export import format_complex, write_matrix_csv, write_matrix_json
from .run_report import ResourceMonitor, RunReport

__all__ = ['ResourceMonitor', 'RunReport', 'format_complex', 'write_matrix_csv', 'write_matrix_json']
