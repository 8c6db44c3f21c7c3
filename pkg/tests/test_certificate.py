"""
Tests for certificate extraction, serialization, checking and the rank dump
"""

import inspect
import io
import json
import random

import pytest

from conftest import FAST_CORPUS, load_statement, saturated_state, statement_from
import src.certificate.checker as checker_module
from src.certificate.checker import check_certificate, verify_binding
from src.certificate.extract import dependency_closure, extract_certificate
from src.certificate.io import (
    certificate_lines, parse_certificate, rank_table_lines, read_certificate, write_certificate,
    write_rank_table
)
from src.core.exceptions import CertificateFormatError, CertificateHashMismatch, ContradictionError
from src.core.models import CheckReason, RankInterval, SaturationOutcome, StepKind
from src.core.state import init_state
from src.engine.saturation import decide


def _certificate_text(statement, state) -> str:
    buffer = io.StringIO()
    write_certificate(extract_certificate(state, statement), buffer)
    return buffer.getvalue()


def _check_text(text, statement):
    return check_certificate(parse_certificate(text), statement)


@pytest.mark.parametrize("name", FAST_CORPUS)
def test_round_trip_is_valid(saturated, name):
    statement, state = saturated(name)
    text = _certificate_text(statement, state)
    result = _check_text(text, statement)
    assert result.valid, result.message
    assert result.steps_checked > 0


def test_planes_certificate_shape(saturated):
    """Pruned to the steps MNP needs; the last lemma establishes MNP"""
    statement, state = saturated("planes_meet_in_line")
    certificate = extract_certificate(state, statement)
    mnp = statement.universe.mask_of(["M", "N", "P"])

    assert len(certificate.steps) < len(state.trace) - 1
    assert certificate.lemmas[-1].target == mnp
    assert certificate.lemmas[-1].goal == RankInterval.of(2, 2)
    assert certificate.header.outcome == SaturationOutcome.FIXPOINT
    assert [lemma.id for lemma in certificate.lemmas] == list(range(len(certificate.lemmas)))
    ids = [step.id for step in certificate.steps]
    assert ids == sorted(ids)
    for lemma in certificate.lemmas:
        assert all(step.target == lemma.target for step in lemma.steps)

    verdict = certificate.verdicts[0]
    assert verdict.points == mnp
    assert verdict.interval == RankInterval.of(2, 2)
    assert verdict.by == [int(state.lo_src[mnp]), int(state.hi_src[mnp])]


def test_certificate_verdicts_match_decision(saturated):
    for name in FAST_CORPUS:
        statement, state = saturated(name)
        certificate = extract_certificate(state, statement)
        expected = [c.status for c in decide(state, statement).conclusions]
        assert [v.status for v in certificate.verdicts] == expected


def test_dependency_closure_excludes_axioms(saturated):
    statement, state = saturated("point_on_line_plane")
    roots = {int(state.lo_src[statement.universe.full_mask]), 0}
    closure = dependency_closure(state, roots)
    assert 0 not in closure
    assert closure == sorted(closure)
    for step_id in closure:
        assert all(dep == 0 or dep in closure for dep in state.trace[step_id].deps)


def test_conclusion_equal_to_hypothesis():
    """One hypothesis step and no rule steps"""
    statement = statement_from("points A B C hypotheses A B C : 3 conclusion A B C : 3")
    state = saturated_state(statement)
    certificate = extract_certificate(state, statement)
    assert [step.kind for step in certificate.steps] == [StepKind.HYPOTHESIS]
    assert check_certificate(certificate, statement).valid


def test_unknown_conclusion_certificate_is_valid():
    statement = statement_from("points A B C hypotheses A B : 2 conclusion A B C : 2")
    state = saturated_state(statement)
    certificate = extract_certificate(state, statement)
    assert certificate.verdicts[0].status.value == "unknown"
    assert check_certificate(certificate, statement).valid


def test_serialized_records():
    statement = load_statement("point_on_line_plane")
    state = saturated_state(statement)
    lines = list(certificate_lines(extract_certificate(state, statement)))
    records = [json.loads(line) for line in lines]
    assert records[0]["type"] == "header"
    assert records[0]["points"] == ["A", "B", "C", "M"]
    assert records[0]["dim"] == 3
    assert records[1]["type"] == "lemma"
    assert {r["type"] for r in records} == {"header", "lemma", "step", "verdict"}
    assert [r["type"] for r in records[-2:]] == ["verdict", "verdict"]
    hypothesis_steps = [r for r in records if r["type"] == "step" and r["kind"] == "hypothesis"]
    assert all(r["rel"] == ":" and "value" in r for r in hypothesis_steps)


def test_tampered_step_is_rejected(saturated):
    """Lowering one claimed bound breaks the arithmetic"""
    statement, state = saturated("planes_meet_in_line")
    lines = _certificate_text(statement, state).splitlines()
    index = next(i for i, line in enumerate(lines) if '"kind": "rule"' in line)
    record = json.loads(lines[index])
    record["new"][1] -= 1
    lines[index] = json.dumps(record, ensure_ascii=False)

    result = _check_text("\n".join(lines), statement)
    assert not result.valid
    assert result.reason == CheckReason.BAD_ARITHMETIC
    assert result.step_id == record["id"]


def test_wrong_statement_is_rejected(saturated):
    statement, state = saturated("planes_meet_in_line")
    certificate = parse_certificate(_certificate_text(statement, state))
    other = load_statement("line_in_planes_meet")
    result = check_certificate(certificate, other)
    assert not result.valid
    assert result.reason == CheckReason.HASH_MISMATCH
    with pytest.raises(CertificateHashMismatch):
        verify_binding(certificate, other)


def test_layout_change_keeps_binding(saturated):
    statement, state = saturated("point_on_line_plane")
    text = _certificate_text(statement, state)
    relaid = statement_from(
        "dimension 3 points A B C M hypotheses A B C : 3 A B M : 2 conclusion A B : 2 A B C M : 3"
    )
    assert _check_text(text, relaid).valid


def test_truncated_certificate_is_rejected(saturated):
    statement, state = saturated("line_in_planes_meet")
    lines = _certificate_text(statement, state).splitlines()
    result = _check_text("\n".join(lines[:-1]), statement)
    assert not result.valid
    assert result.reason == CheckReason.VERDICT_MISMATCH


def test_dropped_step_is_rejected(saturated):
    statement, state = saturated("planes_meet_in_line")
    lines = _certificate_text(statement, state).splitlines()
    index = next(i for i, line in enumerate(lines) if '"kind": "rule"' in line)
    assert not _check_text("\n".join(lines[:index] + lines[index + 1:]), statement).valid


def test_malformed_input():
    with pytest.raises(CertificateFormatError):
        parse_certificate("not json")
    with pytest.raises(CertificateFormatError):
        parse_certificate('{"type": "lemma", "id": 0, "target": ["A"], "goal": [1, 1], "by": [0, 0]}')
    with pytest.raises(CertificateFormatError):
        parse_certificate("")


def test_unknown_point_in_certificate(saturated):
    statement, state = saturated("point_on_line_plane")
    lines = _certificate_text(statement, state).splitlines()
    index = next(i for i, line in enumerate(lines) if '"type": "step"' in line)
    record = json.loads(lines[index])
    record["T"] = ["Z"]
    lines[index] = json.dumps(record)
    with pytest.raises(CertificateFormatError):
        parse_certificate("\n".join(lines))


def _numeric_paths(value, path=()):
    if isinstance(value, bool):
        return
    if isinstance(value, int):
        yield path
    elif isinstance(value, dict):
        for key, item in value.items():
            yield from _numeric_paths(item, path + (key,))
    elif isinstance(value, list):
        for position, item in enumerate(value):
            yield from _numeric_paths(item, path + (position,))


def _mutate(record, path, delta):
    target = record
    for key in path[:-1]:
        target = target[key]
    target[path[-1]] += delta


def test_numeric_mutations_are_rejected(saturated):
    """Changing any number in any record is caught, except the header's elapsed_ms"""
    statement, state = saturated("planes_meet_in_line")
    lines = _certificate_text(statement, state).splitlines()
    rng = random.Random(1234)
    rejected = 0
    trials = 1000
    for _ in range(trials):
        index = rng.randrange(len(lines))
        record = json.loads(lines[index])
        paths = [path for path in _numeric_paths(record) if path != ("elapsed_ms",)]
        _mutate(record, rng.choice(paths), rng.choice([-2, -1, 1, 2]))
        mutated = lines[:index] + [json.dumps(record, ensure_ascii=False)] + lines[index + 1:]
        try:
            result = _check_text("\n".join(mutated), statement)
        except CertificateFormatError:
            rejected += 1
            continue
        if not result.valid:
            rejected += 1
    assert rejected >= 0.99 * trials


def test_checker_is_independent_of_engine():
    source = inspect.getsource(checker_module)
    assert "src.engine" not in source
    assert "src.core.state" not in source


def test_init_contradiction_certificate():
    statement = load_statement("contradiction")
    with pytest.raises(ContradictionError) as exc_info:
        init_state(statement)
    state = exc_info.value.state
    certificate = extract_certificate(state, statement)
    assert certificate.header.outcome == SaturationOutcome.CONTRADICTION
    assert certificate.lemmas[-1].is_contradiction
    assert len(certificate.lemmas[-1].steps) == 1
    assert certificate.verdicts == []
    text = "\n".join(certificate_lines(certificate))
    assert '"target": "⊥"' in text
    assert _check_text(text, statement).valid


def test_derived_contradiction_certificate():
    statement = statement_from("points A B C hypotheses A B : 2 A B C <= 1 conclusion A B C : 1")
    state = saturated_state(statement)
    assert state.is_contradictory
    certificate = extract_certificate(state, statement)
    final = certificate.lemmas[-1]
    assert final.is_contradiction
    assert final.goal.is_empty
    assert final.steps[0].id == state.contradiction_step
    assert check_certificate(parse_certificate(_certificate_text(statement, state)), statement).valid


def test_contradiction_claim_without_derivation(saturated):
    statement, state = saturated("point_on_line_plane")
    lines = _certificate_text(statement, state).splitlines()
    header = json.loads(lines[0])
    header["outcome"] = "contradiction"
    lines[0] = json.dumps(header, ensure_ascii=False)
    result = _check_text("\n".join(lines), statement)
    assert not result.valid
    assert result.reason == CheckReason.VERDICT_MISMATCH


def test_certificate_file_round_trip(saturated, tmp_path):
    statement, state = saturated("triangle_case_a_eq_m")
    path = tmp_path / "triangle.cert"
    write_certificate(extract_certificate(state, statement), path)
    assert check_certificate(read_certificate(path), statement).valid


def test_rank_dump_single_point():
    state = saturated_state(statement_from("points A conclusion A : 1"))
    assert list(rank_table_lines(state)) == ["∅: 0 0", "A : 1 1"]


def test_rank_dump_nine_points(saturated, tmp_path):
    statement, state = saturated("planes_meet_in_line")
    path = tmp_path / "ranks.txt"
    assert write_rank_table(state, path) == 512
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 512
    assert lines[0] == "∅: 0 0"
    assert "M N P : 2 2" in lines
    assert "A B C : 3 3" in lines


@pytest.mark.slow
def test_hyperplanes5d_certificate_and_dump(saturated):
    statement, state = saturated("space3d_in_hyperplanes5d")
    certificate = extract_certificate(state, statement)
    assert len(certificate.verdicts) == 2
    assert check_certificate(certificate, statement).valid
    assert "A B C D E M : 5 5" in set(rank_table_lines(state))


@pytest.mark.slow
def test_coplanar_desargues_certificate(saturated):
    statement, state = saturated("desargues3d_coplanar")
    text = _certificate_text(statement, state)
    result = _check_text(text, statement)
    assert result.valid, result.message
    assert parse_certificate(text).verdicts[0].status.value == "proved"
