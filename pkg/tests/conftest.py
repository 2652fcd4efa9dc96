"""
Shared fixtures: the bundled toy dataset, a workspace built from it in a
temporary index directory, and small hand-made graphs.
"""
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from kgexplain.config.settings import load_config  # noqa: E402
from kgexplain.kg.catalog import load_catalog  # noqa: E402
from kgexplain.kg.graph import load_graph  # noqa: E402
from kgexplain.workspace import WorkspaceOperations  # noqa: E402

TOY_DIR = ROOT / "data" / "toy"
TOY_CONFIG = TOY_DIR / "config.toml"


def toy_config_for(index_dir, runs_dir):
    return load_config(str(TOY_CONFIG)).with_overrides({
        "data": {"index_dir": str(index_dir), "runs_dir": str(runs_dir)},
        "jobs": 1,
    }).validate()


def write_toy_config(path: Path, index_dir: Path, runs_dir: Path, **sections) -> Path:
    """TOML copy of the toy config with absolute paths, for command-line tests."""
    lines = [
        "[data]",
        f'triples = "{(TOY_DIR / "triples.tsv").as_posix()}"',
        f'items = "{(TOY_DIR / "items.jsonl").as_posix()}"',
        f'users = "{(TOY_DIR / "users.jsonl").as_posix()}"',
        f'corpus = "{(TOY_DIR / "eval_corpus.jsonl").as_posix()}"',
        f'index_dir = "{index_dir.as_posix()}"',
        f'runs_dir = "{runs_dir.as_posix()}"',
    ]
    for section, values in sections.items():
        lines.append(f"[{section}]")
        for key, value in values.items():
            lines.append(f'{key} = "{value}"' if isinstance(value, str) else f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def toy_config(tmp_path_factory):
    base = tmp_path_factory.mktemp("toy")
    return toy_config_for(base / "index", base / "runs")


@pytest.fixture(scope="session")
def toy_workspace(toy_config):
    return WorkspaceOperations.open(toy_config)


@pytest.fixture
def triangle_lines():
    """Target t with attribute a, history item h sharing a, and a direct h-t link."""
    return [
        "h\thas\ta",
        "t\thas\ta",
        "h\tsimilar\tt",
    ]


@pytest.fixture
def triangle(triangle_lines):
    g = load_graph(triangle_lines)
    cat = load_catalog([
        '{"item_id": "h", "entity": "h", "attributes": ["a"]}',
        '{"item_id": "t", "entity": "t", "attributes": ["a"]}',
    ], g)
    return g, cat
