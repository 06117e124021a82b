"""The DB unit: a single-file append-only journal of subjects and templates.

File layout: magic ``IRIS``, format version u16 LE, then length-prefixed
records ``(type u8, length u32 LE, payload)``.  Payloads are fully binary
(struct-packed, strings length-prefixed UTF-8, digests raw bytes) so that
no enrolled PIN can ever appear as plaintext ASCII in the file.  Raw
images live beside the store as content-addressed PPM files.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from .errors import (
    DuplicateSubjectError,
    InsufficientEnrollmentError,
    NotFoundError,
    PinFormatError,
    StoreError,
)
from .imaging import RgbImage
from .matching import GeomParams
from .transform import IrisCode

MAGIC = b"IRIS"
FORMAT_VERSION = 1
REC_SUBJECT = 1
REC_TEMPLATE = 2
REC_RAW_IMAGE = 3
REC_RAW_PURGE = 4

PBKDF2_ITERATIONS = 10_000
DEFAULT_RETENTION_S = 24 * 3600.0


def validate_pin(pin: str) -> str:
    if len(pin) != 5 or not all(c in "0123456789" for c in pin):
        raise PinFormatError("pin must be exactly five decimal digits")
    return pin


def hash_pin(pin: str, salt: bytes) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", pin.encode(), salt, PBKDF2_ITERATIONS)


@dataclass(frozen=True)
class IrisTemplate:
    code: IrisCode
    geom: GeomParams
    selector_version: str
    created_at: float


@dataclass
class SubjectRecord:
    subject_id: str
    display_name: str
    pin_salt: bytes
    pin_hash: bytes
    enrolled_at: float
    templates: List[IrisTemplate] = field(default_factory=list)


@dataclass(frozen=True)
class RawImageEntry:
    image_ref: bytes  # sha256 digest of the PPM bytes
    subject_id: Optional[str]
    captured_at: float
    expires_at: float


def _pack_str(s: str) -> bytes:
    b = s.encode()
    return struct.pack("<H", len(b)) + b


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        b = self.buf[self.pos : self.pos + n]
        if len(b) != n:
            raise StoreError("truncated record payload")
        self.pos += n
        return b

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u16()).decode()


def _pack_bits(b: np.ndarray) -> bytes:
    return np.packbits(b.astype(np.uint8)).tobytes()


def _unpack_bits(data: bytes, n: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n].astype(bool)


class Store:
    """Single-writer, multi-reader persistent store."""

    def __init__(self, path):
        self.path = Path(path)
        self.image_dir = self.path.parent / (self.path.name + ".images")
        self._lock = threading.RLock()
        self._subjects: Dict[str, SubjectRecord] = {}
        self._raw: Dict[bytes, RawImageEntry] = {}
        self._fh = None
        self._open()

    # -- journal ----------------------------------------------------------

    def _open(self):
        if self.path.exists():
            self._replay(self.path.read_bytes())
            self._fh = open(self.path, "ab")
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "wb")
            self._fh.write(MAGIC + struct.pack("<H", FORMAT_VERSION))
            self._fh.flush()
        self.image_dir.mkdir(exist_ok=True)

    def close(self):
        with self._lock:
            if self._fh:
                self._fh.close()
                self._fh = None

    def _append(self, rec_type: int, payload: bytes):
        if self._fh is None:
            raise StoreError("store is closed")
        self._fh.write(struct.pack("<BI", rec_type, len(payload)) + payload)
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def _replay(self, raw: bytes):
        if raw[:4] != MAGIC:
            raise StoreError("not a store file")
        (version,) = struct.unpack("<H", raw[4:6])
        if version != FORMAT_VERSION:
            raise StoreError(f"unsupported store version {version}")
        pos = 6
        while pos < len(raw):
            rec_type, length = struct.unpack("<BI", raw[pos : pos + 5])
            pos += 5
            payload = raw[pos : pos + length]
            if len(payload) != length:
                raise StoreError("truncated journal record")
            pos += length
            self._apply(rec_type, payload)

    def _apply(self, rec_type: int, payload: bytes):
        r = _Reader(payload)
        if rec_type == REC_SUBJECT:
            sid = r.string()
            name = r.string()
            salt = r.take(16)
            digest = r.take(32)
            enrolled_at = r.f64()
            self._subjects[sid] = SubjectRecord(sid, name, salt, digest, enrolled_at)
        elif rec_type == REC_TEMPLATE:
            sid = r.string()
            sel = r.string()
            k = r.u32()
            nbytes = (k + 7) // 8
            bits = _unpack_bits(r.take(nbytes), k)
            mask = _unpack_bits(r.take(nbytes), k)
            geom = GeomParams(*(r.f64() for _ in range(5)))
            created_at = r.f64()
            tpl = IrisTemplate(IrisCode(bits, mask), geom, sel, created_at)
            self._subjects[sid].templates.append(tpl)
        elif rec_type == REC_RAW_IMAGE:
            ref = r.take(32)
            has_sid = r.take(1)[0]
            sid = r.string() if has_sid else None
            captured_at = r.f64()
            expires_at = r.f64()
            self._raw[ref] = RawImageEntry(ref, sid, captured_at, expires_at)
        elif rec_type == REC_RAW_PURGE:
            count = r.u32()
            for _ in range(count):
                self._raw.pop(r.take(32), None)
        else:
            raise StoreError(f"unknown record type {rec_type}")

    # -- writes -----------------------------------------------------------

    def add_subject(self, subject_id: str, display_name: str, pin: str,
                    enrolled_at: Optional[float] = None) -> SubjectRecord:
        validate_pin(pin)
        with self._lock:
            if subject_id in self._subjects:
                raise DuplicateSubjectError(f"subject {subject_id!r} already enrolled")
            salt = os.urandom(16)
            digest = hash_pin(pin, salt)
            ts = time.time() if enrolled_at is None else enrolled_at
            payload = (_pack_str(subject_id) + _pack_str(display_name)
                       + salt + digest + struct.pack("<d", ts))
            self._append(REC_SUBJECT, payload)
            rec = SubjectRecord(subject_id, display_name, salt, digest, ts)
            self._subjects[subject_id] = rec
            return rec

    def add_template(self, subject_id: str, template: IrisTemplate):
        with self._lock:
            if subject_id not in self._subjects:
                raise NotFoundError(subject_id)
            k = len(template.code)
            payload = (
                _pack_str(subject_id)
                + _pack_str(template.selector_version)
                + struct.pack("<I", k)
                + _pack_bits(template.code.bits)
                + _pack_bits(template.code.mask)
                + struct.pack("<5d", *template.geom.as_array())
                + struct.pack("<d", template.created_at)
            )
            self._append(REC_TEMPLATE, payload)
            self._subjects[subject_id].templates.append(template)

    def add_raw_image(self, img: RgbImage, subject_id: Optional[str],
                      captured_at: Optional[float] = None,
                      retention_s: float = DEFAULT_RETENTION_S) -> RawImageEntry:
        with self._lock:
            ts = time.time() if captured_at is None else captured_at
            ppm = b"P6\n%d %d\n255\n" % (img.width, img.height) + img.data
            ref = hashlib.sha256(ppm).digest()
            (self.image_dir / (ref.hex() + ".ppm")).write_bytes(ppm)
            payload = ref + (b"\x01" + _pack_str(subject_id) if subject_id else b"\x00")
            payload += struct.pack("<dd", ts, ts + retention_s)
            self._append(REC_RAW_IMAGE, payload)
            entry = RawImageEntry(ref, subject_id, ts, ts + retention_s)
            self._raw[ref] = entry
            return entry

    def enroll(self, subject_id: str, display_name: str, pin: str,
               images: List[RgbImage],
               encoder: Callable[[RgbImage], Optional[IrisTemplate]],
               now: Optional[float] = None) -> SubjectRecord:
        """Full registration: encode every image, keep those passing morphology.

        encoder returns a template, or None for images failing segmentation
        or the morphology gate.  Fewer than 3 surviving templates aborts.
        """
        validate_pin(pin)
        with self._lock:
            if subject_id in self._subjects:
                raise DuplicateSubjectError(f"subject {subject_id!r} already enrolled")
            if len(images) < 3:
                raise InsufficientEnrollmentError("need at least 3 images")
            templates = []
            for img in images:
                tpl = encoder(img)
                if tpl is not None:
                    templates.append((img, tpl))
            if len(templates) < 3:
                raise InsufficientEnrollmentError(
                    f"only {len(templates)} of {len(images)} images usable"
                )
            rec = self.add_subject(subject_id, display_name, pin, enrolled_at=now)
            for img, tpl in templates:
                self.add_template(subject_id, tpl)
                self.add_raw_image(img, subject_id, captured_at=now)
            return rec

    def purge_expired(self, now: Optional[float] = None) -> int:
        with self._lock:
            ts = time.time() if now is None else now
            expired = [ref for ref, e in self._raw.items() if e.expires_at <= ts]
            if not expired:
                return 0
            payload = struct.pack("<I", len(expired)) + b"".join(expired)
            self._append(REC_RAW_PURGE, payload)
            for ref in expired:
                self._raw.pop(ref)
                p = self.image_dir / (ref.hex() + ".ppm")
                if p.exists():
                    p.unlink()
            return len(expired)

    def compact(self):
        """Rewrite the journal from live state, dropping purged raw entries."""
        with self._lock:
            tmp = self.path.with_suffix(".compact")
            with open(tmp, "wb") as f:
                f.write(MAGIC + struct.pack("<H", FORMAT_VERSION))
            old_fh = self._fh
            self._fh = open(tmp, "ab")
            try:
                for sid in sorted(self._subjects):
                    rec = self._subjects[sid]
                    payload = (_pack_str(sid) + _pack_str(rec.display_name)
                               + rec.pin_salt + rec.pin_hash
                               + struct.pack("<d", rec.enrolled_at))
                    self._append(REC_SUBJECT, payload)
                    templates = rec.templates
                    rec.templates = []
                    for tpl in templates:
                        self.add_template(sid, tpl)
                for ref in sorted(self._raw):
                    e = self._raw[ref]
                    payload = ref + (b"\x01" + _pack_str(e.subject_id) if e.subject_id else b"\x00")
                    payload += struct.pack("<dd", e.captured_at, e.expires_at)
                    self._append(REC_RAW_IMAGE, payload)
            finally:
                self._fh.close()
                old_fh.close()
                os.replace(tmp, self.path)
                self._fh = open(self.path, "ab")

    # -- reads ------------------------------------------------------------

    def lookup(self, subject_id: str) -> SubjectRecord:
        with self._lock:
            if subject_id not in self._subjects:
                raise NotFoundError(subject_id)
            return self._subjects[subject_id]

    def check_pin(self, subject_id: str, pin: str) -> bool:
        rec = self.lookup(subject_id)
        try:
            validate_pin(pin)
        except PinFormatError:
            return False
        return hmac.compare_digest(hash_pin(pin, rec.pin_salt), rec.pin_hash)

    def all_templates(self) -> Iterator[Tuple[str, IrisTemplate]]:
        with self._lock:
            items = []
            for sid in sorted(self._subjects):
                for tpl in sorted(self._subjects[sid].templates, key=lambda t: t.created_at):
                    items.append((sid, tpl))
        return iter(items)

    def subjects(self) -> List[SubjectRecord]:
        with self._lock:
            return [self._subjects[s] for s in sorted(self._subjects)]

    def raw_entries(self) -> List[RawImageEntry]:
        with self._lock:
            return [self._raw[r] for r in sorted(self._raw)]
