"""
Hard-prompt assembly.

Sections are rendered in a fixed order: system instruction, user history,
target item, evidence. The evidence section is left out entirely when no
path was selected.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateNotFound

from kgexplain.errors import ConfigError
from kgexplain.kg.catalog import ItemCatalog
from kgexplain.kg.history import UserHistory
from kgexplain.utils.hashing import text_sha256
from kgexplain.utils.io import write_text

logger = logging.getLogger(__name__)

PROMPT_TEMPLATE_DIR = "templates/prompt"
PROMPT_TEMPLATE_NAME = "explanation.j2"
SYSTEM_INSTRUCTION_NAME = "system_instruction.txt"


def ensure_template_dir(template_dir: Optional[str] = None) -> Path:
    """
    Locate the prompt template directory.

    Looks at the given directory, then templates/prompt under the working
    directory, then the copy shipped next to the source tree.

    Raises:
        ConfigError: If no directory holds the template
    """
    candidates = [Path(template_dir)] if template_dir else []
    candidates += [Path.cwd() / PROMPT_TEMPLATE_DIR, Path(__file__).resolve().parents[3] / PROMPT_TEMPLATE_DIR]
    for candidate in candidates:
        if (candidate / PROMPT_TEMPLATE_NAME).is_file():
            return candidate
    raise ConfigError(f"Prompt template {PROMPT_TEMPLATE_NAME} not found in {', '.join(map(str, candidates))}")


def default_system_instruction(template_dir: Optional[str] = None) -> str:
    path = ensure_template_dir(template_dir) / SYSTEM_INSTRUCTION_NAME
    return path.read_text(encoding="utf-8").strip()


def load_system_instruction(value: Optional[str]) -> str:
    """A configured instruction may be literal text or a path to a text file."""
    if not value:
        return default_system_instruction()
    path = Path(value)
    if path.is_file():
        return path.read_text(encoding="utf-8").strip()
    return value.strip()


@dataclass(frozen=True)
class PromptBundle:
    system: str
    history: str
    target: str
    evidence: str
    text: str

    @property
    def prompt_hash(self) -> str:
        return text_sha256(self.text)

    @property
    def evidence_lines(self) -> int:
        return len([line for line in self.evidence.splitlines() if line.strip()])

    def export(self, path: Union[str, Path]) -> Path:
        return write_text(path, self.text)


def history_text(history: UserHistory, cat: ItemCatalog, exclude: Optional[str] = None) -> str:
    """One line per history item, oldest first, with the features the user liked."""
    lines = []
    for item_id in history.items:
        if item_id == exclude:
            continue
        title = cat.title(item_id) if item_id in cat else item_id
        liked = history.liked_features(item_id)
        lines.append(f"- {title}" + (f" (liked: {', '.join(liked)})" if liked else ""))
    return "\n".join(lines) if lines else "- (no history)"


def target_text(cat: ItemCatalog, target: str) -> str:
    item = cat.get(target)
    return item.title if item.title == item.entity_name else f"{item.title} [{item.entity_name}]"


def assemble_prompt(
    system: str,
    history: str,
    target: str,
    evidence: str,
    template_dir: Optional[str] = None,
) -> PromptBundle:
    """
    Render the prompt template.

    Args:
        system: System instruction
        history: Serialized user history
        target: Target item descriptor
        evidence: Evidence block (may be empty)
        template_dir: Optional directory holding explanation.j2

    Returns:
        PromptBundle: Parts and rendered text
    """
    env = Environment(
        loader=FileSystemLoader(str(ensure_template_dir(template_dir))),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
        autoescape=False,
    )
    try:
        template = env.get_template(PROMPT_TEMPLATE_NAME)
    except TemplateNotFound as e:
        raise ConfigError(f"Prompt template missing: {e}") from e

    text = template.render(system=system, history=history, target=target, evidence=evidence.strip())
    logger.debug(f"Assembled prompt ({len(text)} chars, evidence lines: {len(evidence.splitlines())})")
    return PromptBundle(system=system, history=history, target=target, evidence=evidence.strip(), text=text)
