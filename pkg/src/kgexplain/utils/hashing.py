"""
Stable hashing helpers shared by the hash embedding backend and provenance.
"""
import hashlib


def stable_seed(seed: int, namespace: str, name: str) -> int:
    """Derive a 64-bit RNG seed from (seed, namespace, name), independent of PYTHONHASHSEED."""
    digest = hashlib.blake2b(f"{seed}\x1f{namespace}\x1f{name}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def text_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
