"""On-device fact-check matching: perceptual hashing, indexes, bundles,
messaging simulation and share-log analysis."""

from ._core import (
    BloomFilter,
    MihIndex,
    analyze,
    build_bundle,
    dihedral_hashes,
    hamming,
    hash_file,
    hash_pixels,
    simulate,
    verify_bundle,
)

__all__ = [
    "BloomFilter",
    "MihIndex",
    "analyze",
    "build_bundle",
    "dihedral_hashes",
    "hamming",
    "hash_file",
    "hash_pixels",
    "simulate",
    "verify_bundle",
]
