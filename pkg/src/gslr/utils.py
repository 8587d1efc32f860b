"""Seeded random streams and file digests."""
import hashlib
import zlib

import numpy as np

RNG_NAME = "numpy.random.PCG64"


def derive_rng(seed, *tags):
    """Independent ``Generator`` for ``(seed, *tags)``.

    Tags are hashed with CRC-32 so streams do not depend on call order or on
    Python's salted ``hash``.
    """
    words = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF]
    for tag in tags:
        words.append(zlib.crc32(str(tag).encode("utf-8")))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def rng_description():
    return {"generator": RNG_NAME, "seeding": "SeedSequence([seed_lo, seed_hi, crc32(tag)...])",
            "numpy_version": np.__version__}


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()
