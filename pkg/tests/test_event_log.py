"""Run log ordering and merging."""

from src.models.manifest import RunEventKind
from src.systems.event_log import RunLog


def _log():
    log = RunLog()
    log.add(RunEventKind.STARTED, "a-s0", "start")
    log.add(RunEventKind.SOLVED, "a-s0", "fokker_planck", steps=20)
    log.add(RunEventKind.FAILED, "a-s1", "CFL violated")
    return log


def test_sequence_numbers_follow_insertion():
    log = _log()
    assert [e.seq for e in log.get_all()] == [0, 1, 2]
    assert log.get_all()[1].data == {"steps": 20}


def test_queries():
    log = _log()
    assert [e.run_id for e in log.failures()] == ["a-s1"]
    assert [e.message for e in log.get_by_kind(RunEventKind.SOLVED)] == ["fokker_planck"]
    assert log.get_by_kind(RunEventKind.CHECK) == []


def test_extend_renumbers_merged_events():
    merged = RunLog()
    merged.add(RunEventKind.STARTED, "b-s0")
    merged.extend(_log().get_all())
    assert [e.seq for e in merged.get_all()] == [0, 1, 2, 3]
    assert merged.get_all()[3].kind == RunEventKind.FAILED
    assert [e.seq for e in merged.failures()] == [3]
