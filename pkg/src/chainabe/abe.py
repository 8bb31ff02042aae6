"""Decentralized inner-product predicate encryption over logical slots.

A system with ``L`` slots has one ``(X, tau, sigma)`` secret per slot; the last
slot belongs to the trust authority and every user holds attribute 1 there.
A ciphertext for policy vector ``x`` decrypts under key parts for attribute
vector ``v`` exactly when ``<x, v> = 0``.
"""

import struct
from dataclasses import dataclass

from . import wire
from .algebra import (
    P, G1Point, G2Point, GTPoint, _tick, combine_columns, g2, hadamard, hash_to_g2,
    mask_oracle, multi_exp, multi_exp_matvec, pairing, power_scalar, random_scalar,
    vector_pairing,
)

H_DOMAIN = b"cabe:user-key-hash"
CT_VERSION = 1


class AbeError(ValueError):
    pass


@wire.record
@dataclass(frozen=True)
class SystemParams:
    """``A_pub = g1^A`` and ``UA_pub = g1^(U^T A)``, both (k+1) x k."""

    A_pub: tuple
    UA_pub: tuple
    k: int

    @property
    def g1(self):
        return G1Point.generator()

    @property
    def g2(self):
        return G2Point.generator()


@wire.record
@dataclass(frozen=True)
class SlotSecret:
    X: tuple
    tau: tuple
    sigma: int


@wire.record
@dataclass(frozen=True)
class SlotPublic:
    XA_pub: tuple
    tauA_pub: tuple
    y: G2Point


@wire.record
@dataclass(frozen=True)
class KeyPart:
    K: tuple
    slot: int


@wire.record
@dataclass(frozen=True)
class AbeCiphertext:
    ct0: tuple
    cts: tuple
    ct_prime: GTPoint

    @property
    def L(self):
        return len(self.cts)

    def to_bytes(self):
        k1 = len(self.ct0)
        out = bytearray([CT_VERSION]) + struct.pack(">HH", k1 - 1, len(self.cts))
        for pt in self.ct0:
            out += pt.to_bytes()
        for row in self.cts:
            if len(row) != k1:
                raise AbeError("ciphertext rows have inconsistent length")
            for pt in row:
                out += pt.to_bytes()
        out += self.ct_prime.to_bytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data):
        if len(data) < 5 or data[0] != CT_VERSION:
            raise AbeError("unsupported ciphertext format")
        k, L = struct.unpack(">HH", data[1:5])
        k1, size = k + 1, G1Point.size
        if len(data) != 5 + (L + 1) * k1 * size + GTPoint.size:
            raise AbeError("ciphertext length does not match header")
        pts = [G1Point.from_bytes(data[5 + t * size:5 + (t + 1) * size]) for t in range((L + 1) * k1)]
        ct_prime = GTPoint.from_bytes(data[5 + (L + 1) * k1 * size:])
        rows = tuple(tuple(pts[r * k1:(r + 1) * k1]) for r in range(L + 1))
        return cls(rows[0], rows[1:], ct_prime)


def random_slot_secret(k, rng):
    k1 = k + 1
    X = tuple(tuple(rng.randrange(P) for _ in range(k1)) for _ in range(k1))
    tau = tuple(rng.randrange(P) for _ in range(k1))
    return SlotSecret(X, tau, random_scalar(rng))


def slot_public(params, secret):
    """Public images ``g1^(X^T A)``, ``e(g1, g2)^(tau^T A)`` and ``g2^sigma``."""
    cols = list(zip(*secret.X))
    XA = tuple(combine_columns(params.A_pub, col) for col in cols)
    tauA = tuple(pairing(p, g2()) for p in combine_columns(params.A_pub, secret.tau))
    return SlotPublic(XA, tauA, g2() ** secret.sigma)


def slot_keygen(params, rng):
    secret = random_slot_secret(params.k, rng)
    return slot_public(params, secret), secret


def derive_h(gid, c, k):
    """``g2^h`` for ``h = H(GID, C)``; no party learns ``h`` itself."""
    return tuple(hash_to_g2(H_DOMAIN, gid, c, t) for t in range(1, k + 2))


def masking(slot, sigma, all_y, gid, c, dim):
    """``mu_slot``: pairwise oracle outputs added for lower slots, subtracted for higher ones."""
    if all_y[slot] != g2() ** sigma:
        raise AbeError("own y does not match sigma")
    mu = [0] * dim
    for j, y in enumerate(all_y):
        if j == slot:
            continue
        sign = 1 if j < slot else -1
        for t, m in enumerate(mask_oracle(y ** sigma, gid, c, dim)):
            mu[t] = (mu[t] + sign * m) % P
    return tuple(mu)


def issue_key_part(secret, v, h_pub, mu, slot, trust=False):
    """``K = g2^tau * (g2^(X h))^(-v) * g2^mu``, built from ``g2^h`` without knowing ``h``."""
    if v not in (0, 1):
        raise AbeError("attribute value must be 0 or 1")
    if trust and v != 1:
        raise AbeError("trust slot only issues keys for v = 1")
    if len(h_pub) != len(secret.tau) or len(mu) != len(secret.tau):
        raise AbeError("dimension mismatch")
    K = []
    for r, row in enumerate(secret.X):
        part = g2() ** ((secret.tau[r] + mu[r]) % P)
        if v:
            part = part / multi_exp(h_pub, row)
        K.append(part)
    return KeyPart(tuple(K), slot)


def encode_policy(required, L, rng, naive=False):
    """Policy vector for the conjunction of ``required`` slots.

    The default draws a fresh nonzero weight per required slot; ``naive``
    uses weight 1 and exists only to reproduce the attacks it enables.
    """
    required = set(required)
    if any(not 0 <= i < L - 1 for i in required):
        raise AbeError("required attributes must lie in [0, L-1)")
    x = [0] * L
    for i in sorted(required):
        x[i] = 1 if naive else random_scalar(rng)
    x[L - 1] = -sum(x) % P
    return tuple(v % P for v in x)


def inner(x, v):
    return sum(a * b for a, b in zip(x, v)) % P


def random_payload(rng):
    return GTPoint.generator() ** random_scalar(rng)


def encrypt(params, slot_pubs, x, payload, rng, s=None):
    """Encrypt ``payload`` (a GT element) under policy vector ``x``."""
    if len(slot_pubs) != len(x):
        raise AbeError("one slot public key per policy entry required")
    k = params.k
    if s is None:
        s = tuple(rng.randrange(P) for _ in range(k))
        while not any(s):
            s = tuple(rng.randrange(P) for _ in range(k))
    if len(s) != k:
        raise AbeError("s must have length k")
    if not any(e % P for e in s):
        raise AbeError("s must be nonzero")
    ct0 = multi_exp_matvec(params.A_pub, s)
    cts, mask = [], GTPoint.identity()
    for xi, pub in zip(x, slot_pubs):
        cts.append(multi_exp_matvec(hadamard(power_scalar(params.UA_pub, xi), pub.XA_pub), s))
        mask = mask * multi_exp(pub.tauA_pub, s)
    return AbeCiphertext(ct0, tuple(cts), payload * mask)


def decrypt(key_parts, v, h_pub, ct):
    """Recover the payload; a wrong attribute vector yields an unrelated GT element."""
    L = ct.L
    if len(key_parts) != L or len(v) != L:
        raise AbeError("need one key part and attribute value per slot")
    k1 = len(ct.ct0)
    if len(h_pub) != k1 or any(len(kp.K) != k1 for kp in key_parts):
        raise AbeError("dimension mismatch")
    K = list(key_parts[0].K)
    for kp in key_parts[1:]:
        K = [a * b for a, b in zip(K, kp.K)]
    combined = [G1Point.identity()] * k1
    for vj, row in zip(v, ct.cts):
        if vj % P:
            _tick("exp_group")
            combined = [a * b ** vj for a, b in zip(combined, row)]
    return ct.ct_prime / (vector_pairing(ct.ct0, K) * vector_pairing(combined, h_pub))
