"""
Scenario loader.

Loads a ``sigprice/1`` JSON scenario, validates it and turns its correlator
block into ready-to-run requests.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import ValidationError

from sigprice.algebra import parse_weighted_word
from sigprice.correlator import CorrelatorRequest
from sigprice.errors import ScenarioError
from sigprice.models import Scenario

logger = logging.getLogger(__name__)


def _format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{location}: {item['msg']}")
    return "; ".join(lines)


def parse_scenario(data: dict, source: str = "<scenario>") -> Scenario:
    try:
        return Scenario.parse_obj(data)
    except ValidationError as e:
        raise ScenarioError(f"{source}: {_format_validation_error(e)}") from e


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Load and validate a scenario file.

    Raises:
        ScenarioError: missing file, malformed JSON (with line and column)
            or a field that fails validation (with its dotted field path).
    """
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"Scenario file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    scenario = parse_scenario(data, str(path))
    logger.info("Loaded scenario '%s' from %s", scenario.name, path)
    return scenario


def apply_overrides(
    scenario: Scenario,
    seed: Optional[int] = None,
    n_paths: Optional[int] = None,
    out: Optional[str] = None,
    paths_to_write: Optional[int] = None,
) -> Scenario:
    """Command-line values take precedence over the file."""
    update = {}
    if seed is not None:
        update["seed"] = seed
    if n_paths is not None:
        update["n_paths"] = n_paths
    output = scenario.output.copy(
        update={k: v for k, v in (("dir", out), ("paths_to_write", paths_to_write)) if v is not None}
    )
    update["output"] = output
    data = scenario.dict(by_alias=True)
    data.update({k: (v.dict() if hasattr(v, "dict") else v) for k, v in update.items()})
    return parse_scenario(data, "<command line>")


def correlator_requests(scenario: Scenario) -> List[Tuple[str, CorrelatorRequest]]:
    block = scenario.correlators
    if block is None:
        raise ScenarioError("scenario has no 'correlators' block")
    alphabet = scenario.process.path_dim + (1 if block.time_enhanced else 0)
    requests = []
    for spec in block.requests:
        words = tuple(parse_weighted_word(text, alphabet) for text in spec.words)
        requests.append(
            (
                spec.id,
                CorrelatorRequest(
                    words=words,
                    multi_index=tuple(spec.multi_index),
                    lift=scenario.lift,
                    depth=block.depth,
                    time_enhanced=block.time_enhanced,
                ),
            )
        )
    return requests
