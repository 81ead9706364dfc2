import os
import logging
from pathlib import Path
from typing import List, Union

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def clean_filename(filename: str) -> str:
    """Clean a string to be used as a filename."""
    # Replace invalid characters
    invalid_chars = '<>:"/\\|?*'
    for char in invalid_chars:
        filename = filename.replace(char, '_')

    filename = filename.replace(' ', '_')

    while '__' in filename:
        filename = filename.replace('__', '_')

    filename = filename.strip('_.')
    return filename[:100]


def ensure_dir_exists(path: PathLike) -> None:
    """Create directory if it doesn't exist."""
    try:
        os.makedirs(path, exist_ok=True)
    except Exception as e:
        logger.error(f"Error creating directory {path}: {e}")
        raise


def ensure_parent_exists(path: PathLike) -> None:
    """Create the parent directory of a file path if needed."""
    parent = Path(path).parent
    if str(parent):
        ensure_dir_exists(parent)


def sorted_files(directory: PathLike, suffix: str) -> List[Path]:
    """List files with a suffix in a directory, sorted by name."""
    directory = Path(directory)
    return sorted(p for p in directory.iterdir() if p.is_file() and p.name.endswith(suffix))


def sorted_subdirs(directory: PathLike) -> List[Path]:
    """List immediate subdirectories sorted by name."""
    directory = Path(directory)
    return sorted(p for p in directory.iterdir() if p.is_dir())
