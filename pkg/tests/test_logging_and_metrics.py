import json
import logging

from core.performance import PerformanceTracker
from utils.structured_logger import ContextVars, get_logger, operation_logger, setup_structured_logging


def test_timers_and_counters():
    tracker = PerformanceTracker()
    with tracker.timed("solve"):
        pass
    with tracker.timed("solve"):
        pass
    assert tracker.increment_counter("trials") == 1
    assert tracker.increment_counter("trials", 4) == 5
    metrics = tracker.get_metrics()
    assert metrics["timers"]["solve"]["count"] == 2
    assert metrics["counters"] == {"trials": 5}
    assert "solve" in tracker.summary()
    tracker.reset()
    assert tracker.get_metrics() == {"timers": {}, "counters": {}}
    assert tracker.summary() == ""


def test_summary_goes_to_given_stream(capsys):
    tracker = PerformanceTracker()
    tracker.increment_counter("groundstates")
    tracker.print_summary()
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "groundstates" in captured.err


def test_context_vars():
    ContextVars.set("trial_seed", 17)
    assert ContextVars.get("trial_seed") == 17
    assert ContextVars.get_all()["trial_seed"] == 17
    ContextVars.unset("trial_seed")
    assert ContextVars.get("trial_seed", "gone") == "gone"


def test_json_log_file(tmp_path):
    log_dir = tmp_path / "logs"
    assert setup_structured_logging(app_name="frustra-test", log_dir=str(log_dir), console_level=logging.ERROR,
                                    force=True)
    log = get_logger("frustra.tests")
    log.info("trial finished", extra={"structured_data": {"k": 3}})
    with log.trace_operation("solve", n=2):
        pass
    for handler in logging.getLogger().handlers:
        handler.flush()

    lines = (log_dir / "frustra-test_json.log").read_text().splitlines()
    records = [json.loads(line) for line in lines]
    finished = [r for r in records if r["message"] == "trial finished"]
    assert finished and finished[0]["data"] == {"k": 3}
    assert finished[0]["correlation_id"]
    assert any(r["message"].startswith("Completed operation: solve") for r in records)
    setup_structured_logging(enable_file_logs=False, force=True)


def test_operation_logger_wraps_async():
    import asyncio

    @operation_logger(operation_name="double")
    async def double(x):
        return 2 * x

    @operation_logger
    def triple(x):
        return 3 * x

    assert asyncio.run(double(4)) == 8
    assert triple(2) == 6
