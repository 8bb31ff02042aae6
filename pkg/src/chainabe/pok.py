"""s-pairs, commitments to them, and Schnorr proofs of knowledge of exponents."""

from dataclasses import dataclass

from . import wire
from .algebra import (
    P, G1Point, G2Point, GTPoint, combine_columns, commit_hash, power_multi,
    random_scalar, scalar_from_bytes, scalar_to_bytes, transpose,
)

PROOF_VERSION = 1


@wire.record
@dataclass(frozen=True)
class SPair:
    """``(base, power)`` with ``power = base ** s``; entrywise when both are matrices."""

    base: object
    power: object

    @property
    def is_matrix(self):
        return isinstance(self.base, tuple)

    @property
    def group(self):
        return type(self.base[0][0] if self.is_matrix else self.base)

    def entry(self, i, j):
        return SPair(self.base[i][j], self.power[i][j])

    def to_bytes(self):
        return wire.encode(self)


@wire.record
@dataclass(frozen=True)
class ImagePair:
    """``(g^M, g^(W^T M))``: the published image of a secret matrix ``W``.

    Row ``r`` of ``image`` is ``combine_columns(base, W[:, r])``.  Used for
    the authority key parts ``g1^(X^T A)`` and ``g1^(tau^T A)``, which are not
    entrywise s-pairs.
    """

    base: tuple
    image: tuple

    def to_bytes(self):
        return wire.encode(self)


@wire.record
@dataclass(frozen=True)
class PoKProof:
    R: object
    u: int

    def to_bytes(self):
        return bytes([PROOF_VERSION]) + self.R.encode() + scalar_to_bytes(self.u)

    @classmethod
    def from_bytes(cls, data):
        if len(data) < 2 or data[0] != PROOF_VERSION:
            raise ValueError("unsupported proof format")
        group = {G1Point.tag: G1Point, G2Point.tag: G2Point}.get(data[1])
        if group is None or len(data) != 2 + group.size + 32:
            raise ValueError("malformed proof")
        R = group.decode(data[1:2 + group.size])
        return cls(R, scalar_from_bytes(data[2 + group.size:]))


@wire.record
@dataclass(frozen=True)
class LinearPoK:
    """Multi-base Schnorr proof for one row of an ImagePair."""

    R: tuple
    u: tuple


def _broadcast(base, rows, cols):
    return tuple((base,) * cols for _ in range(rows))


def make_spair(base, s):
    if isinstance(s, int):
        if s % P == 0:
            raise ValueError("s-pair secret must be nonzero")
        return SPair(base, base ** s)
    bases = base if isinstance(base, tuple) else _broadcast(base, len(s), len(s[0]))
    return SPair(bases, power_multi(bases, s))


def make_dual(s, g1, g2):
    """The G1 s-pair and its G2 twin for one secret."""
    return make_spair(g1, s), make_spair(g2, s)


def make_image_pair(base, w):
    """Image of the secret matrix ``w`` ((k+1) x m) or vector ``w`` ((k+1),) over ``base``."""
    cols = [w] if isinstance(w[0], int) else transpose(w)
    return ImagePair(base, tuple(combine_columns(base, col) for col in cols))


def element_digest(element):
    """Digest of one committed element: a single pair or a tuple of dual pairs."""
    pairs = element if isinstance(element, tuple) else (element,)
    return commit_hash(b"".join(rp.to_bytes() for rp in pairs))


def commit_spairs(elements):
    """Per-element digests and the overall commitment over their concatenation."""
    digests = tuple(element_digest(el) for el in elements)
    overall = commit_hash(b"".join(scalar_to_bytes(d) for d in digests))
    return digests, overall


def proof_context(overall, digest):
    """Challenge context ``h || h_s`` binding a proof to one commitment."""
    return scalar_to_bytes(overall) + scalar_to_bytes(digest)


def _challenge(R, context):
    return commit_hash(R.to_bytes() + context)


def nizk_prove(rp, s, context, rng):
    if rp.is_matrix:
        raise TypeError("use prove_matrix for matrix s-pairs")
    if rp.base ** s != rp.power:
        raise ValueError("secret does not match the s-pair")
    alpha = random_scalar(rng)
    R = rp.base ** alpha
    c = _challenge(R, context)
    return PoKProof(R, (alpha + c * s) % P)


def nizk_verify(rp, proof, context):
    try:
        if rp.is_matrix or not isinstance(proof, PoKProof):
            return False
        if type(proof.R) is not type(rp.base) or type(rp.power) is not type(rp.base):
            return False
        if not isinstance(proof.u, int) or not 0 <= proof.u < P:
            return False
        c = _challenge(proof.R, context)
        return rp.base ** proof.u == proof.R * rp.power ** c
    except (TypeError, ValueError, AttributeError):
        return False


def prove_matrix(rp, s, context, rng):
    """One scalar proof per entry; structurally-zero entries carry ``None``."""
    return tuple(
        tuple(None if e % P == 0 else nizk_prove(rp.entry(i, j), e, context, rng)
              for j, e in enumerate(row))
        for i, row in enumerate(s)
    )


def verify_matrix(rp, proofs, context):
    try:
        if not rp.is_matrix or len(proofs) != len(rp.base):
            return False
        for i, row in enumerate(proofs):
            if len(row) != len(rp.base[i]) or len(rp.power[i]) != len(row):
                return False
            for j, proof in enumerate(row):
                if proof is None:
                    if not rp.power[i][j].is_identity():
                        return False
                elif not nizk_verify(rp.entry(i, j), proof, context):
                    return False
        return True
    except (TypeError, ValueError, AttributeError, IndexError):
        return False


def _linear_challenge(R, context):
    return commit_hash(b"".join(r.to_bytes() for r in R) + context)


def prove_image(pair, w, context, rng):
    """Prove knowledge of ``w`` behind an ImagePair, one LinearPoK per image row."""
    cols = [w] if isinstance(w[0], int) else transpose(w)
    if make_image_pair(pair.base, w).image != pair.image:
        raise ValueError("secret does not match the image pair")
    proofs = []
    for col in cols:
        alphas = [random_scalar(rng) for _ in col]
        R = combine_columns(pair.base, alphas)
        c = _linear_challenge(R, context)
        proofs.append(LinearPoK(R, tuple((a + c * x) % P for a, x in zip(alphas, col))))
    return tuple(proofs)


def verify_image(pair, proofs, context):
    try:
        if len(proofs) != len(pair.image):
            return False
        for row, proof in zip(pair.image, proofs):
            if not isinstance(proof, LinearPoK) or len(proof.R) != len(row):
                return False
            if len(proof.u) != len(pair.base) or not all(0 <= u < P for u in proof.u):
                return False
            if any(type(r) is not type(row[0]) for r in proof.R):
                return False
            c = _linear_challenge(proof.R, context)
            lhs = combine_columns(pair.base, proof.u)
            if any(l != r * y ** c for l, r, y in zip(lhs, proof.R, row)):
                return False
        return True
    except (TypeError, ValueError, AttributeError, IndexError):
        return False


__all__ = [
    "SPair", "ImagePair", "PoKProof", "LinearPoK", "GTPoint",
    "make_spair", "make_dual", "make_image_pair", "element_digest", "commit_spairs",
    "proof_context", "nizk_prove", "nizk_verify", "prove_matrix", "verify_matrix",
    "prove_image", "verify_image",
]
