# Utils modules
from .helpers import *

__all__ = [
    "generate_hash", "multi_indices", "multi_indices_upto", "float_list",
    "csv_text", "gnuplot_text", "allocate_run_dir", "write_text", "read_points",
]
