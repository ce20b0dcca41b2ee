import json
import os
import random
from pathlib import Path

import pytest

import factcheck

DATA = Path(os.environ.get("FACTCHECK_TEST_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))
FIXTURES = DATA / "fixtures"
KEY = "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"


def test_constant_pixels_hash_to_zero():
    hex_, quality = factcheck.hash_pixels(20, 10, 1, bytes([128]) * 200)
    assert hex_ == "0" * 64
    assert quality == 0


def test_reference_vectors_match():
    lines = (DATA / "pdq_reference" / "vectors.tsv").read_text().splitlines()
    rows = [l.split() for l in lines if l and not l.startswith("#")]
    assert rows
    for canonical, _te, _quality, name in rows:
        hex_, _ = factcheck.hash_file(str(DATA / "pdq_reference" / name))
        assert factcheck.hamming(hex_, canonical) <= 10


def test_dihedral_names():
    names = [n for n, _, _ in factcheck.dihedral_hashes(str(FIXTURES / "scenario10" / "rumor.pgm"))]
    assert names[0] == "identity" and len(names) == 8


def test_index_and_bloom_round_trip():
    rng = random.Random(3)
    hashes = [f"{rng.getrandbits(256):064x}" for _ in range(50)]
    idx = factcheck.MihIndex(list(enumerate(hashes)))
    assert len(idx) == 50
    assert idx.query(hashes[7], 0) == [(7, 0)]
    again = factcheck.MihIndex.deserialize(idx.serialize())
    assert again.query(hashes[9]) == idx.query(hashes[9])
    with pytest.raises(Exception):
        idx.query(hashes[0], 32)

    bloom = factcheck.BloomFilter(50, 0.01)
    for h in hashes:
        bloom.add(h)
    assert all(h in bloom for h in hashes)
    restored = factcheck.BloomFilter.deserialize(bloom.serialize())
    assert restored.bit_count == bloom.bit_count


def test_bundle_build_and_verify():
    text = factcheck.build_bundle(str(FIXTURES / "scenario10" / "factchecks.csv"), 1, KEY, now="2026-01-01")
    assert text == (FIXTURES / "scenario10" / "bundle_v1.json").read_text()
    assert factcheck.verify_bundle(text, KEY) == "ok"
    assert factcheck.verify_bundle(text, "ff" * 32) != "ok"


def test_simulate_block_forward():
    report = json.loads(
        factcheck.simulate(str(FIXTURES / "scenario10" / "script.jsonl"), seed=1,
                           policy="block-forward", key_hex=KEY, telemetry=True)
    )
    assert report["prevented_total"] == 6
    assert report["counters"] == {"42": 6}


def test_analyze_fixtures():
    brazil = json.loads(factcheck.analyze(str(FIXTURES / "brazil_shares.csv"), str(FIXTURES / "brazil_checks.csv")))
    assert brazil["pct_after_text"] == "40.7"
    assert brazil["max_shares_after"] == 96
    india = json.loads(
        factcheck.analyze(str(FIXTURES / "india_shares.csv"), str(FIXTURES / "india_checks.csv"), exclude_over=1000)
    )
    assert india["pct_after_text"] == "82.2"
    assert abs(india["outlier_exclusion"]["pct_after"] - 71.7) <= 0.1 + 1e-9
