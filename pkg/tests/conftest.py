"""
Shared fixtures: the statement corpus and cached saturation runs
"""

from pathlib import Path
from typing import Callable, Dict, Tuple

import pytest

from src.core.models import Statement, Strategy
from src.core.state import SaturationState, init_state
from src.engine.saturation import saturate
from src.monitoring.logging import setup_logging
from src.parser.statement_parser import parse_statement

STATEMENTS_DIR = Path(__file__).resolve().parent.parent / "statements"

# Corpus files that saturate to a fixpoint in well under a second
SMALL_CORPUS = [
    "point_on_line_plane",
    "triangle_case_a_ne_m",
    "triangle_case_a_eq_m",
    "planes_meet_in_line",
    "line_in_planes_meet",
    "planes4d",
]

# The small corpus plus the other sub-second files: the 10-point Desargues pair
# and the statement without hypotheses
FAST_CORPUS = SMALL_CORPUS + ["desargues3d", "desargues3d_perturbed", "distinctness"]

# 15-point universes; saturation takes minutes
LARGE_CORPUS = [
    "desargues3d_coplanar", "desargues3d_tetrahedra", "hyperplanes5d_meet", "space3d_in_hyperplanes5d"
]


def statement_path(name: str) -> Path:
    return STATEMENTS_DIR / f"{name}.stmt"


def statement_text(name: str) -> str:
    return statement_path(name).read_text(encoding="utf-8")


def load_statement(name: str) -> Statement:
    return parse_statement(statement_text(name))


def statement_from(text: str, dimension: int = 3) -> Statement:
    """Build a statement from inline text"""
    return parse_statement(text, default_dimension=dimension)


def saturated_state(statement: Statement, strategy: Strategy = Strategy.WORKLIST) -> SaturationState:
    state = init_state(statement)
    saturate(state, strategy)
    return state


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    """Route structured logs through stdlib logging on stderr"""
    setup_logging("WARNING")


@pytest.fixture(scope="session")
def saturated() -> Callable[[str, Strategy], Tuple[Statement, SaturationState]]:
    """Saturate corpus files once per session; callers must not mutate the state"""
    cache: Dict[Tuple[str, Strategy], Tuple[Statement, SaturationState]] = {}

    def run(name: str, strategy: Strategy = Strategy.WORKLIST) -> Tuple[Statement, SaturationState]:
        key = (name, strategy)
        if key not in cache:
            statement = load_statement(name)
            cache[key] = (statement, saturated_state(statement, strategy))
        return cache[key]

    return run
