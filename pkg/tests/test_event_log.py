import re

import event_log


def test_log_event_format_and_filter(tmp_path):
    event_log.configure(log_dir=str(tmp_path / "logs"))
    event_log.log_event("loaded iris", "D")
    event_log.log_event("started")
    entries = event_log.read_entries()
    assert len(entries) == 2
    assert re.fullmatch(r"\[\d\d:\d\d:\d\d\] \[D\] loaded iris\n", entries[0])
    assert event_log.read_entries(log_type="G") == [entries[1]]


def test_echo_to_stderr(tmp_path, capsys):
    event_log.configure(log_dir=str(tmp_path), echo=True)
    event_log.log_event("hello", "B")
    assert "[B] hello" in capsys.readouterr().err


def test_read_entries_missing_file(tmp_path):
    assert event_log.read_entries(str(tmp_path / "none.txt")) == []
