import math

import pytest

from irisid.dispatcher import (
    AlertRule,
    Dispatcher,
    Notification,
    NotificationSink,
    dispatch_notification,
    spc_chart,
)
from irisid.errors import PeriodError, StoreError, WindowError


@pytest.fixture
def disp(tmp_path):
    return Dispatcher(tmp_path / "events.ndjson")


class TestRecordEvent:
    def test_first_id_is_one(self, disp):
        assert disp.record_event("enroll", timestamp=1.0).event_id == 1

    def test_ids_strictly_increasing(self, disp):
        a = disp.record_event("verify_accept", timestamp=1.0)
        b = disp.record_event("verify_reject", timestamp=2.0)
        assert b.event_id > a.event_id

    def test_unknown_kind_rejected(self, disp):
        with pytest.raises(StoreError):
            disp.record_event("coffee_break", timestamp=1.0)
        assert disp.next_id == 1  # no id consumed

    def test_log_replay(self, tmp_path):
        d = Dispatcher(tmp_path / "e.ndjson")
        d.record_event("door_open", door_id="d1", timestamp=5.0)
        d.record_event("door_deny", door_id="d2", timestamp=6.0)
        replayed = Dispatcher(tmp_path / "e.ndjson")
        assert replayed.events == d.events
        r1 = d.build_report(0.0, 10.0)
        r2 = replayed.build_report(0.0, 10.0)
        assert r1 == r2


class TestReports:
    def test_empty_log(self, disp):
        r = disp.build_report(0.0, 3600.0)
        assert r.door_counts == {} and r.flow == [0]
        assert sum(r.totals.values()) == 0

    def test_direct_counts(self, disp):
        for i in range(5):
            disp.record_event("verify_accept", door_id="door7", subject_id="s1",
                              timestamp=100.0 + i)
        r = disp.build_report(0.0, 3600.0)
        assert r.door_counts["door7"]["verify_accept"] == 5
        assert r.flow == [5]
        assert r.subject_counts["s1"]["accept"] == 5

    def test_half_open_interval(self, disp):
        disp.record_event("door_open", timestamp=3600.0)
        r = disp.build_report(0.0, 3600.0)
        assert sum(r.totals.values()) == 0

    def test_inverted_period(self, disp):
        with pytest.raises(PeriodError):
            disp.build_report(10.0, 5.0)

    def test_additivity(self, disp):
        for i, ts in enumerate([10.0, 50.0, 120.0, 180.0, 260.0]):
            disp.record_event("door_open" if i % 2 else "door_deny",
                              door_id=f"d{i % 2}", timestamp=ts)
        a, b, c = 0.0, 150.0, 300.0
        r_ab = disp.build_report(a, b)
        r_bc = disp.build_report(b, c)
        r_ac = disp.build_report(a, c)
        for kind in r_ac.totals:
            assert r_ab.totals[kind] + r_bc.totals[kind] == r_ac.totals[kind]

    def test_csv_export(self, disp):
        disp.record_event("door_open", door_id="d1", timestamp=1.0)
        assert "d1,door_open,1" in disp.build_report(0.0, 10.0).to_csv()


class TestSpcChart:
    def test_constant_values(self):
        chart = spc_chart([(i, 0.3) for i in range(5)])
        assert chart.mean == 0.3 and chart.sigma == 0.0
        assert chart.ucl == chart.lcl == 0.3
        assert not any(f for _, _, f in chart.points)

    def test_injected_outlier_flagged(self):
        vals = [(i, 0.2) for i in range(20)] + [(20, 0.95)]
        # hand check: mean = (20*0.2 + 0.95)/21, only the 0.95 exceeds mean+3σ
        xs = [v for _, v in vals]
        mean = sum(xs) / len(xs)
        sigma = math.sqrt(sum((x - mean) ** 2 for x in xs) / len(xs))
        assert 0.95 > mean + 3 * sigma
        chart = spc_chart(vals)
        flagged = [eid for eid, _, f in chart.points if f]
        assert flagged == [20]

    def test_symmetric_pairs(self):
        c, d = 0.5, 0.1
        chart = spc_chart([(0, c - d), (1, c + d), (2, c - d), (3, c + d)])
        assert chart.mean == pytest.approx(c)
        assert chart.sigma == pytest.approx(d)
        assert not any(f for _, _, f in chart.points)

    def test_window_too_small(self):
        with pytest.raises(WindowError):
            spc_chart([(0, 1.0)])


def reject_rule(sinks, n=3, window=60.0):
    return AlertRule("r1", "n_rejects_in_window", n, window, sinks)


class TestAlerts:
    def test_three_rejects_raise_once(self, tmp_path):
        sink_file = tmp_path / "alerts.log"
        d = Dispatcher(tmp_path / "e.ndjson", rules=[reject_rule(["f"])],
                       sinks=[NotificationSink("f", "file", str(sink_file))])
        for i in range(3):
            d.record_event("verify_reject", timestamp=100.0 + 5 * i)
        alerts = [e for e in d.events if e.kind == "alert"]
        assert len(alerts) == 1
        assert len(sink_file.read_text().splitlines()) == 1

    def test_suppression_window(self, tmp_path):
        d = Dispatcher(tmp_path / "e.ndjson", rules=[reject_rule(["f"])],
                       sinks=[NotificationSink("f", "file", str(tmp_path / "a.log"))])
        for i in range(3):
            d.record_event("verify_reject", timestamp=100.0 + 5 * i)
        d.record_event("verify_reject", timestamp=115.0)
        assert len([e for e in d.events if e.kind == "alert"]) == 1

    def test_no_rules(self, tmp_path):
        d = Dispatcher(tmp_path / "e.ndjson")
        e = d.record_event("verify_reject", timestamp=1.0)
        assert d.evaluate_alert_rules(e) == []

    def test_two_sinks_fan_out(self, tmp_path):
        sinks = [NotificationSink("email", "email_stub", str(tmp_path / "email.log")),
                 NotificationSink("sms", "sms_stub", str(tmp_path / "sms.log"))]
        d = Dispatcher(tmp_path / "e.ndjson", rules=[reject_rule(["email", "sms"])],
                       sinks=sinks)
        for i in range(3):
            d.record_event("verify_reject", timestamp=100.0 + i)
        assert len(d.deliveries) == 2
        assert (tmp_path / "email.log").exists() and (tmp_path / "sms.log").exists()

    def test_spc_trigger(self, tmp_path):
        rule = AlertRule("spc", "spc_out_of_control", 21, 3600.0, [])
        d = Dispatcher(tmp_path / "e.ndjson", rules=[rule])
        for i in range(20):
            d.record_event("verify_accept", fused_score=0.2, timestamp=float(i))
        d.record_event("verify_reject", fused_score=0.95, timestamp=21.0)
        assert any(e.kind == "alert" for e in d.events)

    def test_ack(self, tmp_path):
        d = Dispatcher(tmp_path / "e.ndjson", rules=[reject_rule([])])
        for i in range(3):
            d.record_event("verify_reject", timestamp=100.0 + i)
        alert = next(e for e in d.events if e.kind == "alert")
        assert d.unacknowledged_alerts() == [alert]
        assert d.ack_alert(alert.event_id)
        assert d.unacknowledged_alerts() == []
        assert not d.ack_alert(99999)


class TestNotificationDispatch:
    def test_file_sink_line_format(self, tmp_path):
        sink = NotificationSink("f", "file", str(tmp_path / "n.log"))
        n = Notification("rule-x", 1700000000.0, "three rejects at door main")
        rec = dispatch_notification(n, sink)
        assert rec.ok and rec.attempts == 1
        line = (tmp_path / "n.log").read_text().strip()
        ts, kind, rule, msg = line.split("\t")
        assert kind == "file" and rule == "rule-x" and msg.startswith("three rejects")
        assert ts.startswith("2023-")

    def test_unwritable_target_retries(self, tmp_path):
        sink = NotificationSink("f", "file", str(tmp_path / "no" / "dir" / "n.log"))
        sleeps = []
        rec = dispatch_notification(Notification("r", 0.0, "m"), sink,
                                    sleep=sleeps.append)
        assert not rec.ok and rec.attempts == 3
        assert sleeps == [1.0, 1.0]

    def test_stdout_sink(self, capsys):
        sink = NotificationSink("out", "stdout", "")
        rec = dispatch_notification(Notification("r", 0.0, "hello"), sink)
        assert rec.ok
        assert "hello" in capsys.readouterr().out
