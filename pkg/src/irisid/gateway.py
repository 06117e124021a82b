"""Facade tying the pipeline together: enroll, verify, identify.

Verification is two-factor in fixed order: the five-digit code first, then
the iris.  A pin failure short-circuits before any image work.  Every call
produces exactly one terminal event in the dispatcher log.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from . import matching, pipeline
from .dispatcher import Dispatcher
from .errors import NotFoundError
from .imaging import RgbImage
from .matching import MatchScore
from .pipeline import WeightsBundle
from .store import Store, SubjectRecord

STAGE_PIN = "pin"
STAGE_SEGMENTATION = "segmentation"
STAGE_MORPHOLOGY = "morphology"
STAGE_MATCH = "match"


@dataclass(frozen=True)
class VerifyRequest:
    subject_id: str
    pin: str
    image: RgbImage


@dataclass(frozen=True)
class Decision:
    accepted: bool
    fused_score: Optional[float]
    stage_failed: Optional[str]
    event_id: int

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "fused_score": self.fused_score,
            "stage_failed": self.stage_failed,
            "event_id": self.event_id,
        }


@dataclass(frozen=True)
class IdentifyResult:
    subject_id: Optional[str]
    fused_score: Optional[float]
    stage_failed: Optional[str]
    event_id: int

    def to_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "fused_score": self.fused_score,
            "stage_failed": self.stage_failed,
            "event_id": self.event_id,
        }


class Gateway:
    def __init__(self, store: Store, dispatcher: Dispatcher, bundle: WeightsBundle):
        self.store = store
        self.dispatcher = dispatcher
        self.bundle = bundle

    # -- enrollment -------------------------------------------------------

    def run_enroll(self, subject_id: str, display_name: str, pin: str,
                   images: List[RgbImage], door_id: str = "main") -> SubjectRecord:
        def encoder(img):
            tpl, _stage = pipeline.encode_image(img, self.bundle)
            return tpl
        rec = self.store.enroll(subject_id, display_name, pin, images, encoder)
        self.dispatcher.record_event("enroll", door_id, subject_id=subject_id,
                                     details=f"templates={len(rec.templates)}")
        return rec

    # -- matching ---------------------------------------------------------

    def _best_match(self, code, params, templates) -> Optional[MatchScore]:
        best = None
        for tpl in templates:
            triple = pipeline.compare(code, params, tpl.code, tpl.geom)
            score = matching.score_triple(triple, self.bundle.match_weights)
            if best is None or score.fused < best.fused:
                best = score
        return best

    def run_verify(self, req: VerifyRequest, door_id: str = "main") -> Decision:
        try:
            record = self.store.lookup(req.subject_id)
        except NotFoundError:
            e = self.dispatcher.record_event(
                "verify_reject", door_id, subject_id=req.subject_id,
                details="stage=unknown-subject")
            raise NotFoundError(req.subject_id) from None

        if not self.store.check_pin(req.subject_id, req.pin):
            e = self.dispatcher.record_event(
                "verify_reject", door_id, subject_id=req.subject_id,
                details=f"stage={STAGE_PIN}")
            return Decision(False, None, STAGE_PIN, e.event_id)

        tpl, stage = pipeline.encode_image(req.image, self.bundle)
        if tpl is None:
            e = self.dispatcher.record_event(
                "verify_reject", door_id, subject_id=req.subject_id,
                details=f"stage={stage}")
            return Decision(False, None, stage, e.event_id)

        best = self._best_match(tpl.code, tpl.geom, record.templates)
        if best is not None and best.accepted:
            e = self.dispatcher.record_event(
                "verify_accept", door_id, subject_id=req.subject_id,
                fused_score=best.fused)
            return Decision(True, best.fused, None, e.event_id)
        fused = best.fused if best else None
        e = self.dispatcher.record_event(
            "verify_reject", door_id, subject_id=req.subject_id,
            fused_score=fused, details=f"stage={STAGE_MATCH}")
        return Decision(False, fused, STAGE_MATCH, e.event_id)

    def run_identify(self, image: RgbImage, door_id: str = "main") -> IdentifyResult:
        tpl, stage = pipeline.encode_image(image, self.bundle)
        if tpl is None:
            e = self.dispatcher.record_event("identify_miss", door_id,
                                             details=f"stage={stage}")
            return IdentifyResult(None, None, stage, e.event_id)

        best_subject = None
        best_score = None
        for sid, stored in self.store.all_templates():
            triple = pipeline.compare(tpl.code, tpl.geom, stored.code, stored.geom)
            score = matching.score_triple(triple, self.bundle.match_weights)
            if (best_score is None or score.fused < best_score.fused
                    or (score.fused == best_score.fused and sid < best_subject)):
                best_subject, best_score = sid, score

        if best_score is not None and best_score.accepted:
            e = self.dispatcher.record_event("identify_hit", door_id,
                                             subject_id=best_subject,
                                             fused_score=best_score.fused)
            return IdentifyResult(best_subject, best_score.fused, None, e.event_id)
        fused = best_score.fused if best_score else None
        e = self.dispatcher.record_event("identify_miss", door_id, fused_score=fused)
        return IdentifyResult(None, fused, None, e.event_id)
