"""
Yardımcı fonksiyonlar
"""

import csv
import hashlib
import io
import itertools
import os
import re
from typing import Iterable, Iterator, List, Sequence, Tuple
import logging

import numpy as np

logger = logging.getLogger(__name__)


def generate_hash(data) -> str:
    """Metin veya bayt için sha256 özeti"""
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def multi_indices(dim: int, order: int) -> Iterator[Tuple[int, ...]]:
    """|α| = order olan tüm çoklu indeksler (sözlük sırası)"""
    for combo in itertools.combinations_with_replacement(range(dim), order):
        alpha = [0] * dim
        for axis in combo:
            alpha[axis] += 1
        yield tuple(alpha)


def multi_indices_upto(dim: int, order: int) -> List[Tuple[int, ...]]:
    """|α| ≤ order olan çoklu indeksler"""
    return [alpha for j in range(order + 1) for alpha in multi_indices(dim, j)]


def float_list(text: str) -> List[float]:
    """'0.1, 0.2; 0.3' -> [0.1, 0.2, 0.3]"""
    return [float(item) for item in re.split(r"[,;\s]+", text.strip()) if item]


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Sabit başlıklı CSV metni (satır sonu \\n)"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(cell) for cell in row])
    return buffer.getvalue()


def _format_cell(cell) -> str:
    if isinstance(cell, bool):
        return "true" if cell else "false"
    if isinstance(cell, float):
        return repr(cell)
    return str(cell)


def gnuplot_text(comments: Sequence[str], columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    """gnuplot veri dosyası: '#' yorumları + boşlukla ayrılmış sütunlar"""
    lines = [f"# {comment}" for comment in comments]
    lines.append("# " + " ".join(columns))
    for row in rows:
        lines.append(" ".join(_format_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def allocate_run_dir(base: str) -> str:
    """base/run-NNN dizinini oluştur (eski koşular asla ezilmez)"""
    os.makedirs(base, exist_ok=True)
    index = 1
    while True:
        path = os.path.join(base, f"run-{index:03d}")
        try:
            os.makedirs(path)
            return path
        except FileExistsError:
            index += 1


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def read_points(path: str, dim: int) -> np.ndarray:
    """Nokta dosyası oku: her satır bir nokta, virgül veya boşlukla ayrılmış"""
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            row = float_list(line)
            if len(row) != dim:
                raise ValueError(f"{path}: satır {len(rows) + 1} {len(row)} değer içeriyor, {dim} bekleniyordu")
            rows.append(row)
    return np.asarray(rows, dtype=np.float64).reshape(-1, dim) if rows else np.zeros((0, dim))
