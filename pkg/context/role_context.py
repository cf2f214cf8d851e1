"""
Leaf-selection prompt context for remote priors.
"""

import string
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from errors import ConfigError, DataError
from llm_utils import prefix_candidate
from utils.json_utils import load_json

LEAF_SELECTION_CONTEXT = """
You are given variables from a system of cause-and-effect relations. Select the
variable that does not cause any of the other listed variables.

Answer with exactly one candidate name, written as it appears in the list.
"""

EXAMPLE_BLOCK = """Example:
Unordered Variables: node_rain, node_wet_ground
Answer: node_wet_ground"""

ALIAS_LENGTH = 4


@dataclass
class VariableContext:
    data_description: str = ""
    variables: Dict[str, str] = field(default_factory=dict)

    def describe(self, name: str) -> Optional[str]:
        return self.variables.get(name)

    def restricted_to(self, names: Sequence[str]) -> "VariableContext":
        keep = set(names)
        return VariableContext(self.data_description, {k: v for k, v in self.variables.items() if k in keep})

    def renamed(self, aliases: Dict[str, str]) -> "VariableContext":
        return VariableContext(self.data_description, {aliases.get(k, k): v for k, v in self.variables.items()})


def load_variable_context(path: str) -> VariableContext:
    """{"data_description": str, "variables": {name: text}}"""
    payload = load_json(path)
    if not isinstance(payload, dict) or not isinstance(payload.get("variables", {}), dict):
        raise DataError(f"malformed variable description file: {path}")
    variables = {str(k): str(v) for k, v in payload.get("variables", {}).items()}
    return VariableContext(str(payload.get("data_description", "")), variables)


def build_leaf_prompt(remaining: Sequence[str], context: Optional[VariableContext] = None) -> str:
    context = context or VariableContext()
    sections = [LEAF_SELECTION_CONTEXT.strip()]
    sections.append("Unordered Variables: " + ", ".join(prefix_candidate(n) for n in remaining))
    if context.data_description:
        sections.append(f"Data Description: {context.data_description}")

    described = [(n, context.describe(n)) for n in remaining if context.describe(n)]
    if described:
        lines = [f"- {prefix_candidate(n)}: {text}" for n, text in described]
        sections.append("Variable Descriptions:\n" + "\n".join(lines))

    sections.append(EXAMPLE_BLOCK)
    sections.append("Answer:")
    return "\n\n".join(sections)


def mask_variable_names(names: Sequence[str], rng: np.random.Generator) -> Dict[str, str]:
    """Distinct random lowercase aliases, one per name"""
    letters = np.array(list(string.ascii_lowercase))
    aliases: Dict[str, str] = {}
    used = set()
    for name in names:
        alias = "".join(rng.choice(letters, size=ALIAS_LENGTH))
        while alias in used:
            alias = "".join(rng.choice(letters, size=ALIAS_LENGTH))
        used.add(alias)
        aliases[name] = alias
    return aliases


def select_context_set(names: Sequence[str], proportion: float, rng: np.random.Generator) -> List[str]:
    """Seeded subset keeping round(proportion * D) names, in input order"""
    if not 0.0 <= proportion <= 1.0:
        raise ConfigError(f"proportion must lie in [0, 1], got {proportion}")
    k = int(round(proportion * len(names)))
    chosen = set(rng.choice(len(names), size=k, replace=False).tolist()) if k else set()
    return [n for i, n in enumerate(names) if i in chosen]
