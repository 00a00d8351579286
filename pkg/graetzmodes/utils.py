# Utilities
import sys
from pathlib import Path
from typing import Optional, Union

import pandas as pd

from graetzmodes.logging import get_logger

logger = get_logger(__name__)

# round-trip decimal formatting for every CSV the package writes
FLOAT_FORMAT = '%.17g'


def get_file_extension(file_path: Path) -> str:
    return Path(file_path).suffix.lower()


def write_csv(frame: pd.DataFrame, path: Optional[Union[str, Path]] = None) -> Optional[Path]:
    """Write a table with 17 significant digits; ``None`` writes to stdout.

    Args:
        frame: table to write
        path: output file (parent directories are created)

    Returns:
        path: the written file, or None for stdout
    """
    if path is None:
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"💾 Table saved to {path} | rows={len(frame)}")
    return path
