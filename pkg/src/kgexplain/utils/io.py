"""
File helpers: JSON-lines reading and deterministic artifact writing.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Tuple, Union

from kgexplain.errors import DataError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_lines(path: PathLike) -> List[str]:
    """
    Read a UTF-8 text file into a list of lines.

    Raises:
        DataError: If the file does not exist or cannot be read
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise DataError(f"File not found: {file_path}")
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            return f.read().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot read {file_path}: {e}") from e


def iter_jsonl(lines: Iterable[str], source: str = "<input>") -> Iterator[Tuple[int, Dict[str, Any]]]:
    """
    Yield (line_number, object) for every non-blank JSON-lines record.

    Raises:
        DataError: On malformed JSON or a non-object record
    """
    for line_number, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            record = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f"{source}:{line_number}: invalid JSON: {e.msg}") from e
        if not isinstance(record, dict):
            raise DataError(f"{source}:{line_number}: expected a JSON object")
        yield line_number, record


def dumps_canonical(obj: Any) -> str:
    """JSON with sorted keys and fixed separators so equal inputs give equal bytes."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)


def write_text(path: PathLike, text: str) -> Path:
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.debug(f"Wrote {file_path}")
    return file_path


def write_json(path: PathLike, obj: Any) -> Path:
    return write_text(path, dumps_canonical(obj) + "\n")


def write_jsonl(path: PathLike, records: Iterable[Dict[str, Any]]) -> Path:
    body = "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in records)
    return write_text(path, body)
