"""
CSV export service
Every table carries a one-line provenance comment: tool version and config hash
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd

from quantdim import __version__, settings

logger = logging.getLogger(__name__)


def config_hash(payload: Dict[str, Any]) -> str:
    """Stable short hash of a JSON-serializable config"""
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]


class CsvExportService:
    """
    Writes DataFrames with a provenance header
    Output is byte-identical for identical input frames
    """

    def __init__(self, output_dir: Path, provenance: Optional[str] = None):
        self.output_dir = Path(output_dir)
        self.provenance = provenance or ''

    def header_line(self) -> str:
        return f"# quantdim {__version__} config={self.provenance}\n"

    def render(self, frame: pd.DataFrame) -> str:
        body = frame.to_csv(index=False, float_format=settings.CSV_FLOAT_FORMAT, lineterminator='\n')
        return self.header_line() + body

    def export(self, frame: pd.DataFrame, name: str) -> Path:
        """
        Export a frame to <output_dir>/<name>.csv
        """
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / f"{name}.csv"
        path.write_text(self.render(frame), encoding='utf-8')
        logger.info(f"Exported {len(frame)} rows to {path}")
        return path


def read_exported_csv(path: Path) -> pd.DataFrame:
    """Read a file written by CsvExportService"""
    return pd.read_csv(path, comment='#')
