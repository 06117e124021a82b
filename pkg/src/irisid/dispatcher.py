"""Event recording, status reports, SPC charts and alert notification.

Events persist as newline-delimited JSON, one object per line, so the log
can be replayed to rebuild any report or chart exactly.  E-mail/SMS are
stub transports that append documented tab-separated lines to files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from .errors import PeriodError, StoreError, WindowError

SCHEMA_VERSION = "1"

EVENT_KINDS = (
    "enroll", "verify_accept", "verify_reject", "identify_hit",
    "identify_miss", "alert", "door_open", "door_deny",
)

TRIGGER_KINDS = ("n_rejects_in_window", "spc_out_of_control", "unknown_identify_burst")
SINK_KINDS = ("email_stub", "sms_stub", "file", "stdout")


@dataclass(frozen=True)
class Event:
    event_id: int
    timestamp: float
    kind: str
    door_id: str
    subject_id: Optional[str] = None
    fused_score: Optional[float] = None
    details: str = ""

    def to_json(self) -> str:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return json.dumps(d)

    @classmethod
    def from_json(cls, line: str) -> "Event":
        d = json.loads(line)
        d.pop("schema_version", None)
        return cls(**d)


@dataclass(frozen=True)
class StatusReport:
    period: Tuple[float, float]
    door_counts: Dict[str, Dict[str, int]]   # door -> kind -> count
    subject_counts: Dict[str, Dict[str, int]]  # subject -> {accept, reject}
    flow: List[int]  # events per hour bin
    totals: Dict[str, int]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "from": self.period[0],
            "to": self.period[1],
            "door_counts": self.door_counts,
            "subject_counts": self.subject_counts,
            "flow": self.flow,
            "totals": self.totals,
        }

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out)
        w.writerow(["door_id", "kind", "count"])
        for door in sorted(self.door_counts):
            for kind in sorted(self.door_counts[door]):
                w.writerow([door, kind, self.door_counts[door][kind]])
        return out.getvalue()


@dataclass(frozen=True)
class ControlChart:
    window: int
    mean: float
    sigma: float
    ucl: float
    lcl: float
    points: List[Tuple[int, float, bool]]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "window": self.window,
            "mean": self.mean,
            "sigma": self.sigma,
            "ucl": self.ucl,
            "lcl": self.lcl,
            "points": [list(p) for p in self.points],
        }


@dataclass(frozen=True)
class AlertRule:
    rule_id: str
    trigger: str
    n: int
    window_s: float
    sinks: List[str]

    def __post_init__(self):
        if self.trigger not in TRIGGER_KINDS:
            raise ValueError(f"unknown trigger {self.trigger!r}")
        if self.n < 1 or self.window_s <= 0:
            raise ValueError("rule needs n >= 1 and window > 0")


@dataclass(frozen=True)
class NotificationSink:
    sink_id: str
    kind: str
    address: str  # file path for file/email/sms stubs; ignored for stdout

    def __post_init__(self):
        if self.kind not in SINK_KINDS:
            raise ValueError(f"unknown sink kind {self.kind!r}")


@dataclass(frozen=True)
class Notification:
    rule_id: str
    timestamp: float
    message: str


@dataclass(frozen=True)
class DeliveryRecord:
    sink_id: str
    timestamp: float
    ok: bool
    attempts: int


def format_notification_line(n: Notification, sink: NotificationSink) -> str:
    ts = datetime.fromtimestamp(n.timestamp, tz=timezone.utc).isoformat()
    return f"{ts}\t{sink.kind}\t{n.rule_id}\t{n.message}"


def dispatch_notification(n: Notification, sink: NotificationSink,
                          retries: int = 3, backoff_s: float = 1.0,
                          sleep: Callable[[float], None] = time.sleep) -> DeliveryRecord:
    """At-least-once delivery with bounded retry; failures are recorded."""
    line = format_notification_line(n, sink)
    attempts = 0
    while attempts < retries:
        attempts += 1
        try:
            if sink.kind == "stdout":
                print(line)
            else:
                with open(sink.address, "a") as f:
                    f.write(line + "\n")
            return DeliveryRecord(sink.sink_id, time.time(), True, attempts)
        except OSError:
            if attempts < retries:
                sleep(backoff_s)
    return DeliveryRecord(sink.sink_id, time.time(), False, attempts)


def spc_chart(values: List[Tuple[int, float]]) -> ControlChart:
    """Shewhart chart: mean ± 3 population-sigma over (event_id, value) pairs."""
    if len(values) < 2:
        raise WindowError("need at least 2 values")
    xs = [v for _, v in values]
    mean = sum(xs) / len(xs)
    sigma = math.sqrt(sum((x - mean) ** 2 for x in xs) / len(xs))
    ucl = mean + 3 * sigma
    lcl = mean - 3 * sigma
    points = [(eid, v, v > ucl or v < lcl) for eid, v in values]
    return ControlChart(len(values), mean, sigma, ucl, lcl, points)


class Dispatcher:
    """Serialized event recorder with alert evaluation and reporting."""

    def __init__(self, log_path, rules: Optional[List[AlertRule]] = None,
                 sinks: Optional[List[NotificationSink]] = None,
                 retry_backoff_s: float = 1.0,
                 sleep: Callable[[float], None] = time.sleep):
        self.log_path = Path(log_path)
        self.rules = list(rules or [])
        self.sinks = {s.sink_id: s for s in (sinks or [])}
        self.retry_backoff_s = retry_backoff_s
        self._sleep = sleep
        self.events: List[Event] = []
        self.deliveries: List[DeliveryRecord] = []
        self._last_raised: Dict[str, float] = {}
        self._acked: set = set()
        if self.log_path.exists():
            for line in self.log_path.read_text().splitlines():
                if line.strip():
                    self.events.append(Event.from_json(line))
        else:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            self.log_path.touch()

    @property
    def next_id(self) -> int:
        return (self.events[-1].event_id + 1) if self.events else 1

    def record_event(self, kind: str, door_id: str = "main",
                     subject_id: Optional[str] = None,
                     fused_score: Optional[float] = None,
                     details: str = "",
                     timestamp: Optional[float] = None) -> Event:
        if kind not in EVENT_KINDS:
            raise StoreError(f"unknown event kind {kind!r}")
        ts = time.time() if timestamp is None else timestamp
        e = Event(self.next_id, ts, kind, door_id, subject_id, fused_score, details)
        self._persist(e)
        if kind != "alert":
            self.evaluate_alert_rules(e)
        return e

    def _persist(self, e: Event):
        with open(self.log_path, "a") as f:
            f.write(e.to_json() + "\n")
        self.events.append(e)

    def evaluate_alert_rules(self, new_event: Event) -> List[Event]:
        raised = []
        for rule in self.rules:
            last = self._last_raised.get(rule.rule_id)
            if last is not None and new_event.timestamp - last < rule.window_s:
                continue  # suppression window
            if not self._rule_fires(rule, new_event):
                continue
            alert = Event(
                self.next_id, new_event.timestamp, "alert", new_event.door_id,
                new_event.subject_id, None,
                f"rule={rule.rule_id} trigger={rule.trigger}",
            )
            self._persist(alert)
            self._last_raised[rule.rule_id] = new_event.timestamp
            n = Notification(rule.rule_id, new_event.timestamp,
                             f"{rule.trigger} at door {new_event.door_id}")
            for sink_id in rule.sinks:
                sink = self.sinks.get(sink_id)
                if sink is None:
                    continue
                self.deliveries.append(dispatch_notification(
                    n, sink, backoff_s=self.retry_backoff_s, sleep=self._sleep))
            raised.append(alert)
        return raised

    def _rule_fires(self, rule: AlertRule, e: Event) -> bool:
        lo = e.timestamp - rule.window_s
        if rule.trigger == "n_rejects_in_window":
            recent = [x for x in self.events
                      if x.kind == "verify_reject" and lo < x.timestamp <= e.timestamp]
            return len(recent) >= rule.n
        if rule.trigger == "unknown_identify_burst":
            recent = [x for x in self.events
                      if x.kind == "identify_miss" and lo < x.timestamp <= e.timestamp]
            return len(recent) >= rule.n
        if rule.trigger == "spc_out_of_control":
            scored = [(x.event_id, x.fused_score) for x in self.events
                      if x.fused_score is not None][-rule.n :]
            if len(scored) < 2 or e.fused_score is None:
                return False
            chart = spc_chart(scored)
            return chart.points[-1][2]
        return False

    def ack_alert(self, event_id: int) -> bool:
        if any(e.event_id == event_id and e.kind == "alert" for e in self.events):
            self._acked.add(event_id)
            return True
        return False

    def unacknowledged_alerts(self) -> List[Event]:
        return [e for e in self.events if e.kind == "alert" and e.event_id not in self._acked]

    def build_report(self, t_from: float, t_to: float) -> StatusReport:
        if t_from >= t_to:
            raise PeriodError("report period must satisfy from < to")
        door_counts: Dict[str, Dict[str, int]] = {}
        subject_counts: Dict[str, Dict[str, int]] = {}
        n_bins = int(math.ceil((t_to - t_from) / 3600.0))
        flow = [0] * n_bins
        totals = {k: 0 for k in EVENT_KINDS}
        for e in self.events:
            if not (t_from <= e.timestamp < t_to):
                continue
            door_counts.setdefault(e.door_id, {}).setdefault(e.kind, 0)
            door_counts[e.door_id][e.kind] += 1
            totals[e.kind] += 1
            if e.subject_id is not None and e.kind in ("verify_accept", "verify_reject"):
                s = subject_counts.setdefault(e.subject_id, {"accept": 0, "reject": 0})
                s["accept" if e.kind == "verify_accept" else "reject"] += 1
            flow[int((e.timestamp - t_from) // 3600.0)] += 1
        return StatusReport((t_from, t_to), door_counts, subject_counts, flow, totals)

    def recent_scores(self, window: int) -> List[Tuple[int, float]]:
        return [(e.event_id, e.fused_score) for e in self.events
                if e.fused_score is not None][-window:]
