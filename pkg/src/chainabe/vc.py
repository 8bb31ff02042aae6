"""Position-binding vector commitments over per-authority attribute slices."""

from dataclasses import dataclass

from . import wire
from .algebra import G1Point, G2Point, commit_hash, g1, g2, multi_exp, pairing, same_ratio, scalar_to_bytes


@wire.record
@dataclass(frozen=True)
class VCParams:
    """``o[i] = g1^z_i``, ``o_cross[(i, j)] = g1^(z_i z_j)`` for i != j, ``z_pub[i] = g2^z_i``."""

    o: tuple
    o_cross: dict
    z_pub: tuple

    @property
    def n(self):
        return len(self.o)

    def __hash__(self):
        return hash(wire.encode(self))


@wire.record
@dataclass(frozen=True)
class VCOpening:
    op: G1Point
    position: int
    nonce: int


def vc_message(bits, nonce):
    """Message scalar for one slice: ``commit_hash(bits || nonce)``, most significant attribute first."""
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError("bits must be a 0/1 string")
        bits = bits.encode()
    return commit_hash(bytes(bits) + scalar_to_bytes(nonce))


def params_from_secrets(z):
    """Central construction from known ``z`` values; used as a test oracle and for dry runs."""
    o = tuple(g1() ** zi for zi in z)
    cross = {(i, j): o[j] ** z[i] for i in range(len(z)) for j in range(len(z)) if i != j}
    return VCParams(o, cross, tuple(g2() ** zi for zi in z))


def assemble_params(o, o_cross, z_pub):
    """Build VCParams from published pieces, checking every cross term and its symmetry."""
    n = len(o)
    if len(z_pub) != n:
        raise ValueError("o and z_pub lengths differ")
    for i in range(n):
        if not same_ratio((g1(), o[i]), (g2(), z_pub[i])):
            raise ValueError(f"z image {i} inconsistent")
        for j in range(n):
            if i == j:
                continue
            term = o_cross.get((i, j))
            if term is None or term != o_cross.get((j, i)):
                raise ValueError(f"cross term ({i}, {j}) missing or asymmetric")
            if not same_ratio((o[j], term), (g2(), z_pub[i])):
                raise ValueError(f"cross term ({i}, {j}) invalid")
    return VCParams(tuple(o), dict(o_cross), tuple(z_pub))


def vc_commit(params, msgs):
    if len(msgs) != params.n:
        raise ValueError("message count does not match parameters")
    return multi_exp(params.o, msgs)


def vc_open(params, msgs, i, nonce=0):
    if not 0 <= i < params.n:
        raise IndexError("position out of range")
    if len(msgs) != params.n:
        raise ValueError("message count does not match parameters")
    op = G1Point.identity()
    for j, m in enumerate(msgs):
        if j != i:
            op = op * params.o_cross[(i, j)] ** m
    return VCOpening(op, i, nonce)


def vc_verify(params, c, m, i, opening):
    """Check ``e(C / o_i^m, g2^z_i) == e(op_i, g2)``."""
    try:
        if not 0 <= i < params.n:
            return False
        op = opening
        if isinstance(opening, VCOpening):
            if opening.position != i:
                return False
            op = opening.op
        if not isinstance(op, G1Point) or not isinstance(c, G1Point):
            return False
        if not isinstance(params.z_pub[i], G2Point):
            return False
        return pairing(c / params.o[i] ** m, params.z_pub[i]) == pairing(op, g2())
    except (TypeError, ValueError, AttributeError, KeyError):
        return False
