"""JSON-over-HTTP service for the gateway (the console's backend).

Images travel as base64-encoded binary PPM.  Every response carries a
schema_version field.
"""

from __future__ import annotations

import base64
from typing import List

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .dispatcher import SCHEMA_VERSION, spc_chart
from .errors import (
    DuplicateSubjectError,
    InsufficientEnrollmentError,
    NotFoundError,
    PeriodError,
    PinFormatError,
    WindowError,
)
from .gateway import Gateway, VerifyRequest
from .imaging import RgbImage, _parse_netpbm


class EnrollBody(BaseModel):
    subject_id: str
    display_name: str
    pin: str
    images: List[str]  # base64 PPM


class VerifyBody(BaseModel):
    subject_id: str
    pin: str
    image: str
    door_id: str = "main"


class IdentifyBody(BaseModel):
    image: str
    door_id: str = "main"


def _decode_ppm(b64: str) -> RgbImage:
    raw = base64.b64decode(b64)
    try:
        w, h, data = _parse_netpbm(raw, b"P6")
        return RgbImage(w, h, data)
    except ValueError as e:
        raise HTTPException(400, f"bad image: {e}")


def create_app(gateway: Gateway) -> FastAPI:
    app = FastAPI(title="irisid gateway")

    def ok(payload: dict) -> dict:
        payload["schema_version"] = SCHEMA_VERSION
        return payload

    @app.post("/api/enroll")
    def enroll(body: EnrollBody):
        try:
            images = [_decode_ppm(b) for b in body.images]
            rec = gateway.run_enroll(body.subject_id, body.display_name, body.pin, images)
        except PinFormatError as e:
            raise HTTPException(400, f"PinFormatError: {e}")
        except DuplicateSubjectError as e:
            raise HTTPException(409, f"DuplicateSubjectError: {e}")
        except InsufficientEnrollmentError as e:
            raise HTTPException(400, f"InsufficientEnrollmentError: {e}")
        return ok({"subject_id": rec.subject_id, "templates": len(rec.templates)})

    @app.post("/api/verify")
    def verify(body: VerifyBody):
        try:
            decision = gateway.run_verify(
                VerifyRequest(body.subject_id, body.pin, _decode_ppm(body.image)),
                door_id=body.door_id)
        except NotFoundError as e:
            raise HTTPException(404, f"NotFoundError: {e}")
        return ok(decision.to_dict())

    @app.post("/api/identify")
    def identify(body: IdentifyBody):
        result = gateway.run_identify(_decode_ppm(body.image), door_id=body.door_id)
        return ok(result.to_dict())

    @app.get("/api/events")
    def events(since: int = 0):
        evs = [e for e in gateway.dispatcher.events if e.event_id > since]
        return ok({
            "events": [
                {"event_id": e.event_id, "timestamp": e.timestamp, "kind": e.kind,
                 "door_id": e.door_id, "subject_id": e.subject_id,
                 "fused_score": e.fused_score, "details": e.details}
                for e in evs
            ],
            "unacknowledged_alerts": [
                e.event_id for e in gateway.dispatcher.unacknowledged_alerts()
            ],
        })

    @app.get("/api/reports")
    def reports(t_from: float, t_to: float):
        try:
            report = gateway.dispatcher.build_report(t_from, t_to)
        except PeriodError as e:
            raise HTTPException(400, f"PeriodError: {e}")
        return ok(report.to_dict())

    @app.get("/api/spc")
    def spc(window: int = 20):
        scores = gateway.dispatcher.recent_scores(window)
        try:
            chart = spc_chart(scores)
        except WindowError as e:
            raise HTTPException(400, f"WindowError: {e}")
        return ok(chart.to_dict())

    @app.post("/api/alerts/{event_id}/ack")
    def ack(event_id: int):
        if not gateway.dispatcher.ack_alert(event_id):
            raise HTTPException(404, "no such alert event")
        return ok({"acknowledged": event_id})

    @app.get("/api/subjects")
    def subjects():
        return ok({
            "subjects": [
                {"subject_id": r.subject_id, "display_name": r.display_name,
                 "templates": len(r.templates), "enrolled_at": r.enrolled_at}
                for r in gateway.store.subjects()
            ]
        })

    return app
