"""Content-addressed storage, authenticated encryption, and the KEM/DEM bridge to ABE.

Sharing a file: encrypt it under a fresh key ``AK``, store the ciphertext in
the CAS, then seal the metadata ``(AK, loc)`` under a key derived from a
random GT element that is itself ABE-encrypted under the policy.  A reader
whose attributes miss the policy recovers an unrelated GT element, so the
derived key fails the GCM tag and the read is denied.
"""

import hashlib
import os
import struct
import threading
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import abe
from .ledger import NotFound

CAS_TAG = b"cabe:cas:v1"
DEM_TAG = b"cabe:dem:v1"
NONCE_BYTES = 12
KEY_BYTES = 32
METADATA_VERSION = 1
SEALED_VERSION = 1


class PolicyDenied(Exception):
    """The reader's key does not satisfy the ciphertext policy."""


class DemAuthError(Exception):
    pass


def content_hash(data):
    return hashlib.blake2b(data, digest_size=32, person=CAS_TAG).digest()


class MemoryCAS:
    def __init__(self):
        self._blobs = {}
        self._lock = threading.Lock()

    def put(self, data):
        loc = content_hash(data)
        with self._lock:
            self._blobs.setdefault(loc, bytes(data))
        return loc

    def get(self, loc):
        try:
            return self._blobs[loc]
        except KeyError:
            raise NotFound(f"no blob {bytes(loc).hex()}") from None

    def has(self, loc):
        return loc in self._blobs


class DirectoryCAS:
    """One file per blob, named by the hex digest."""

    def __init__(self, root):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def _path(self, loc):
        return os.path.join(self.root, bytes(loc).hex())

    def put(self, data):
        loc = content_hash(data)
        path = self._path(loc)
        if not os.path.exists(path):
            tmp = path + ".tmp"
            with open(tmp, "wb") as f:
                f.write(data)
            os.replace(tmp, path)
        return loc

    def get(self, loc):
        try:
            with open(self._path(loc), "rb") as f:
                return f.read()
        except FileNotFoundError:
            raise NotFound(f"no blob {bytes(loc).hex()}") from None

    def has(self, loc):
        return os.path.exists(self._path(loc))


def random_bytes(rng, n):
    return rng.getrandbits(8 * n).to_bytes(n, "big")


def dem_encrypt(key, plaintext, rng, aad=b""):
    nonce = random_bytes(rng, NONCE_BYTES)
    return nonce + AESGCM(key).encrypt(nonce, plaintext, aad)


def dem_decrypt(key, blob, aad=b""):
    if len(blob) < NONCE_BYTES + 16:
        raise DemAuthError("ciphertext too short")
    try:
        return AESGCM(key).decrypt(blob[:NONCE_BYTES], blob[NONCE_BYTES:], aad)
    except InvalidTag:
        raise DemAuthError("authentication failed") from None


def kem_key(element):
    """Symmetric key derived from a GT element."""
    return hashlib.blake2b(element.to_bytes(), digest_size=KEY_BYTES, person=DEM_TAG).digest()


@dataclass(frozen=True)
class Metadata:
    ak: bytes
    loc: bytes

    def to_bytes(self):
        return bytes([METADATA_VERSION]) + self.ak + self.loc

    @classmethod
    def from_bytes(cls, data):
        if len(data) != 1 + KEY_BYTES + 32 or data[0] != METADATA_VERSION:
            raise ValueError("bad metadata encoding")
        return cls(data[1:1 + KEY_BYTES], data[1 + KEY_BYTES:])


@dataclass(frozen=True)
class SealedMetadata:
    abe_ct: abe.AbeCiphertext
    dem: bytes

    def to_bytes(self):
        ct = self.abe_ct.to_bytes()
        return bytes([SEALED_VERSION]) + struct.pack(">I", len(ct)) + ct + self.dem

    @classmethod
    def from_bytes(cls, data):
        if len(data) < 5 or data[0] != SEALED_VERSION:
            raise ValueError("unsupported sealed metadata format")
        (n,) = struct.unpack(">I", data[1:5])
        if len(data) < 5 + n:
            raise ValueError("truncated sealed metadata")
        return cls(abe.AbeCiphertext.from_bytes(data[5:5 + n]), data[5 + n:])


@dataclass
class SharingSystem:
    """Public handles a data owner needs to share files."""

    params: abe.SystemParams
    slot_pubs: tuple
    table: object
    cas: object
    ledger: object = None


def seal(system, metadata, policy, rng):
    element = abe.random_payload(rng)
    ct = abe.encrypt(system.params, system.slot_pubs, policy, element, rng)
    return SealedMetadata(ct, dem_encrypt(kem_key(element), metadata.to_bytes(), rng))


def unseal(sealed, key_parts, v, h_pub):
    element = abe.decrypt(key_parts, v, h_pub, sealed.abe_ct)
    try:
        return Metadata.from_bytes(dem_decrypt(kem_key(element), sealed.dem))
    except DemAuthError:
        raise PolicyDenied("key does not satisfy the policy") from None


def policy_for(system, required, rng, naive=False):
    slots = {system.table.slot_of(a) if isinstance(a, str) else a for a in required}
    return abe.encode_policy(slots, len(system.slot_pubs), rng, naive=naive)


def share_file(data, required, system, rng, sender, kw=None, naive=False):
    """Encrypt, store and log one file; returns the log index."""
    ak = random_bytes(rng, KEY_BYTES)
    loc = system.cas.put(dem_encrypt(ak, data, rng))
    sealed = seal(system, Metadata(ak, loc), policy_for(system, required, rng, naive=naive), rng)
    return system.ledger.tx(sender, "log.log", sealed.to_bytes(), kw)


def retrieve_file(entry, key_parts, v, h_pub, cas):
    """Recover file bytes from a log entry; raises PolicyDenied or NotFound."""
    ct_bytes = entry[0] if isinstance(entry, tuple) else entry
    meta = unseal(SealedMetadata.from_bytes(ct_bytes), key_parts, v, h_pub)
    blob = cas.get(meta.loc)
    return dem_decrypt(meta.ak, blob)
