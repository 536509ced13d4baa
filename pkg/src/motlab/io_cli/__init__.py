"""File formats, configuration, rendering and the command line."""
from .config import LockError, RunConfig, load_json, run_lock, write_csv, write_report
from .motfile import MotFormatError, MotRecord, parse_line, parse_mot, read_mot, records_to_table, table_to_records, write_mot
from .render import id_color, render_frame
from .scorer_file import ScorerFileError, dumps_scorer, load_scorer, loads_scorer, save_scorer

__all__ = [
    "LockError", "RunConfig", "load_json", "run_lock", "write_csv", "write_report",
    "MotFormatError", "MotRecord", "parse_line", "parse_mot", "read_mot", "records_to_table",
    "table_to_records", "write_mot", "id_color", "render_frame",
    "ScorerFileError", "dumps_scorer", "load_scorer", "loads_scorer", "save_scorer",
]
