import numpy as np
import pytest

from irisid.errors import (
    DuplicateSubjectError,
    InsufficientEnrollmentError,
    NotFoundError,
    PinFormatError,
)
from irisid.imaging import EyeParams, RgbImage, generate_synthetic_eye
from irisid.matching import GeomParams
from irisid.store import IrisTemplate, Store, validate_pin
from irisid.transform import IrisCode


def template(seed=0, created_at=1000.0):
    rng = np.random.default_rng(seed)
    code = IrisCode(rng.integers(0, 2, 256).astype(bool), np.ones(256, bool))
    geom = GeomParams(0.33, 0.01, 0.34, 0.5, 0.02)
    return IrisTemplate(code, geom, "sel-test", created_at)


def fake_encoder(img):
    # uniform images have no boundary; anything else encodes
    a = img.to_array()
    if a.min() == a.max():
        return None
    return template(seed=a.sum() % 1000)


def eye(seed=0):
    return generate_synthetic_eye(EyeParams(texture_seed=seed))


def uniform_image():
    return RgbImage.from_array(np.full((64, 64, 3), 128, np.uint8))


class TestPin:
    def test_valid(self):
        assert validate_pin("12345") == "12345"

    def test_short(self):
        with pytest.raises(PinFormatError):
            validate_pin("1234")

    def test_non_digit(self):
        with pytest.raises(PinFormatError):
            validate_pin("12a45")


class TestEnroll:
    def test_three_clean_images(self, tmp_path):
        s = Store(tmp_path / "a.store")
        rec = s.enroll("alice", "Alice", "12345", [eye(1), eye(2), eye(3)],
                       fake_encoder, now=100.0)
        assert len(rec.templates) == 3

    def test_duplicate_subject(self, tmp_path):
        s = Store(tmp_path / "a.store")
        s.enroll("alice", "Alice", "12345", [eye(1), eye(2), eye(3)], fake_encoder)
        with pytest.raises(DuplicateSubjectError):
            s.enroll("alice", "Alice", "12345", [eye(1), eye(2), eye(3)], fake_encoder)

    def test_too_many_unusable(self, tmp_path):
        s = Store(tmp_path / "a.store")
        with pytest.raises(InsufficientEnrollmentError):
            s.enroll("bob", "Bob", "12345",
                     [eye(1), uniform_image(), uniform_image()], fake_encoder)

    def test_bad_pin(self, tmp_path):
        s = Store(tmp_path / "a.store")
        with pytest.raises(PinFormatError):
            s.enroll("bob", "Bob", "123", [eye(1), eye(2), eye(3)], fake_encoder)


class TestLookup:
    def test_roundtrip(self, tmp_path):
        s = Store(tmp_path / "a.store")
        s.enroll("alice", "Alice Smith", "12345", [eye(1), eye(2), eye(3)],
                 fake_encoder, now=50.0)
        rec = s.lookup("alice")
        assert rec.display_name == "Alice Smith" and rec.enrolled_at == 50.0

    def test_unknown(self, tmp_path):
        s = Store(tmp_path / "a.store")
        with pytest.raises(NotFoundError):
            s.lookup("nobody")

    def test_check_pin(self, tmp_path):
        s = Store(tmp_path / "a.store")
        s.add_subject("alice", "Alice", "12345")
        assert s.check_pin("alice", "12345")
        assert not s.check_pin("alice", "12346")
        assert not s.check_pin("alice", "1234")


class TestAllTemplates:
    def test_empty(self, tmp_path):
        assert list(Store(tmp_path / "a.store").all_templates()) == []

    def test_ordering(self, tmp_path):
        s = Store(tmp_path / "a.store")
        s.add_subject("b", "B", "00000")
        s.add_subject("a", "A", "00000")
        for sid, times in (("b", [3.0, 1.0, 2.0]), ("a", [2.0, 1.0, 3.0])):
            for t in times:
                s.add_template(sid, template(created_at=t))
        items = list(s.all_templates())
        assert [(sid, tpl.created_at) for sid, tpl in items] == [
            ("a", 1.0), ("a", 2.0), ("a", 3.0), ("b", 1.0), ("b", 2.0), ("b", 3.0)]

    def test_purge_does_not_touch_templates(self, tmp_path):
        s = Store(tmp_path / "a.store")
        s.enroll("alice", "Alice", "12345", [eye(1), eye(2), eye(3)],
                 fake_encoder, now=0.0)
        before = len(list(s.all_templates()))
        s.purge_expired(now=1e12)
        assert len(list(s.all_templates())) == before


class TestPurge:
    def test_nothing_expired(self, tmp_path):
        s = Store(tmp_path / "a.store")
        s.add_raw_image(eye(1), None, captured_at=0.0, retention_s=100.0)
        assert s.purge_expired(now=50.0) == 0

    def test_all_expired(self, tmp_path):
        s = Store(tmp_path / "a.store")
        for i in range(3):
            s.add_raw_image(eye(i), None, captured_at=0.0, retention_s=10.0)
        assert s.purge_expired(now=20.0) == 3
        assert s.raw_entries() == []

    def test_boundary_inclusive(self, tmp_path):
        s = Store(tmp_path / "a.store")
        s.add_raw_image(eye(1), None, captured_at=0.0, retention_s=10.0)
        assert s.purge_expired(now=10.0) == 1


def snapshot(store):
    subs = [
        (r.subject_id, r.display_name, r.pin_salt, r.pin_hash, r.enrolled_at,
         [(t.code.bits.tobytes(), t.code.mask.tobytes(),
           tuple(t.geom.as_array()), t.selector_version, t.created_at)
          for t in r.templates])
        for r in store.subjects()
    ]
    raws = [(e.image_ref, e.subject_id, e.captured_at, e.expires_at)
            for e in store.raw_entries()]
    return subs, raws


class TestDurability:
    def test_reopen_reproduces_state(self, tmp_path):
        path = tmp_path / "a.store"
        s = Store(path)
        s.enroll("alice", "Alice", "12345", [eye(1), eye(2), eye(3)],
                 fake_encoder, now=10.0)
        s.enroll("bob", "Bob", "54321", [eye(4), eye(5), eye(6)],
                 fake_encoder, now=20.0)
        before = snapshot(s)
        s.close()
        assert snapshot(Store(path)) == before

    def test_compaction_preserves_state(self, tmp_path):
        path = tmp_path / "a.store"
        s = Store(path)
        s.enroll("alice", "Alice", "12345", [eye(1), eye(2), eye(3)],
                 fake_encoder, now=10.0)
        s.add_raw_image(eye(9), None, captured_at=0.0, retention_s=5.0)
        s.purge_expired(now=100.0)
        before = snapshot(s)
        s.compact()
        assert snapshot(s) == before
        s.close()
        assert snapshot(Store(path)) == before

    def test_no_plaintext_pin(self, tmp_path):
        path = tmp_path / "a.store"
        s = Store(path)
        pins = ["13579", "86420", "11223"]
        for i, pin in enumerate(pins):
            s.enroll(f"user-{chr(97 + i)}", f"User {chr(97 + i)}", pin,
                     [eye(3 * i), eye(3 * i + 1), eye(3 * i + 2)],
                     fake_encoder, now=float(i))
        raw = path.read_bytes()
        for pin in pins:
            assert pin.encode() not in raw
