import json
from pathlib import Path

import numpy as np
import pytest

from context.role_context import (
    ALIAS_LENGTH,
    VariableContext,
    build_leaf_prompt,
    load_variable_context,
    mask_variable_names,
    select_context_set,
)
from errors import ConfigError, DataError

PHYSICS_FILE = str(Path(__file__).resolve().parent.parent / "context" / "physics_variables.json")


def test_prompt_layout():
    context = VariableContext("Garden sensors", {"rain": "Daily rainfall", "wet": "Lawn wetness"})
    prompt = build_leaf_prompt(["rain", "wet"], context)
    assert (
        "\n\nUnordered Variables: node_rain, node_wet"
        "\n\nData Description: Garden sensors"
        "\n\nVariable Descriptions:\n- node_rain: Daily rainfall\n- node_wet: Lawn wetness"
        "\n\nExample:"
    ) in prompt
    assert prompt.endswith("\n\nAnswer:")


def test_prompt_without_context_skips_optional_sections():
    prompt = build_leaf_prompt(["a", "b"])
    assert "Data Description" not in prompt
    assert "Variable Descriptions" not in prompt


def test_shipped_physics_descriptions():
    context = load_variable_context(PHYSICS_FILE)
    assert set(context.variables) == {"TSI", "SAT", "WS", "ER", "RNFL", "MC", "Wgt"}
    assert "evaporation" in context.data_description


def test_malformed_description_file(tmp_path):
    path = tmp_path / "vars.json"
    path.write_text(json.dumps({"variables": ["a", "b"]}))
    with pytest.raises(DataError):
        load_variable_context(str(path))


def test_restrict_and_rename():
    context = VariableContext("d", {"a": "x", "b": "y"})
    assert context.restricted_to(["b"]).variables == {"b": "y"}
    assert context.renamed({"a": "zzzz"}).variables == {"zzzz": "x", "b": "y"}


def test_aliases_are_distinct_and_seeded():
    names = [f"v{i}" for i in range(50)]
    aliases = mask_variable_names(names, np.random.default_rng(3))
    assert len(set(aliases.values())) == 50
    assert all(len(a) == ALIAS_LENGTH and a.isalpha() and a.islower() for a in aliases.values())
    assert aliases == mask_variable_names(names, np.random.default_rng(3))


@pytest.mark.parametrize("proportion,expected", [(0.0, 0), (0.5, 2), (0.6, 2), (1.0, 4)])
def test_context_set_size(proportion, expected):
    names = ["a", "b", "c", "d"]
    chosen = select_context_set(names, proportion, np.random.default_rng(0))
    assert len(chosen) == expected
    assert chosen == [n for n in names if n in chosen]


def test_context_proportion_range():
    with pytest.raises(ConfigError):
        select_context_set(["a"], 1.5, np.random.default_rng(0))
