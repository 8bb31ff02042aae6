"""Bilinear-group arithmetic over BLS12-381.

Scalars are plain Python ints reduced mod ``P``.  Points are thin immutable
wrappers around the mcl backend, written multiplicatively: ``a * b`` is the
group operation, ``a ** n`` exponentiation and ``a / b`` division, in all
three groups.  Matrices are tuples of row tuples, vectors are tuples.
"""

import contextlib
import contextvars
import hashlib
from collections import Counter

import pymcl

P = int(pymcl.r)
CURVE = "bls12-381"

SCALAR_BYTES = 32

# one-byte format tags: high nibble is the encoding version, low nibble the type
FORMAT_VERSION = 1
TAG_SCALAR = 0x10
TAG_G1 = 0x11
TAG_G2 = 0x12
TAG_GT = 0x13

# BLAKE2 personalisation strings, one per oracle
COMMIT_TAG = b"cabe:commit:v1"
H2G2_TAG = b"cabe:h2g2:v1"
MASK_TAG = b"cabe:mask:v1"


def _fr(n):
    return pymcl.Fr(str(n % P))


class _Point:
    __slots__ = ("_v",)
    tag = 0
    size = 0

    def __init__(self, v):
        self._v = v

    def __eq__(self, other):
        return type(self) is type(other) and self._v == other._v

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash((self.tag, self.to_bytes()))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_bytes().hex()[:16]}...)"

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def to_bytes(self):
        return bytes(self._v.serialize())

    def encode(self):
        """Tagged canonical encoding (format byte || element)."""
        return bytes([self.tag]) + self.to_bytes()

    @classmethod
    def decode(cls, data):
        if len(data) != cls.size + 1 or data[0] != cls.tag:
            raise ValueError(f"bad {cls.__name__} encoding")
        return cls.from_bytes(data[1:])


class _CurvePoint(_Point):
    __slots__ = ()
    _raw = None

    def __mul__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self)(self._v + other._v)

    def __truediv__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self)(self._v + (-other._v))

    def __pow__(self, n):
        n %= P
        if n == 0:
            return self.identity()
        return type(self)(self._v * _fr(n))

    def inverse(self):
        return type(self)(-self._v)

    def is_identity(self):
        return self._v.is_zero()

    @classmethod
    def identity(cls):
        return cls(cls._raw())

    @classmethod
    def from_bytes(cls, data):
        if len(data) != cls.size:
            raise ValueError(f"{cls.__name__} encoding must be {cls.size} bytes")
        try:
            v = cls._raw.deserialize(bytes(data))
        except ValueError as exc:
            raise ValueError(f"invalid {cls.__name__} encoding") from exc
        pt = cls(v)
        # subgroup membership: (P-1)*x + x must vanish
        if not (pt ** (P - 1) * pt).is_identity():
            raise ValueError(f"{cls.__name__} not in prime-order subgroup")
        return pt


class G1Point(_CurvePoint):
    __slots__ = ()
    tag = TAG_G1
    size = 48
    _raw = pymcl.G1

    @classmethod
    def generator(cls):
        return cls(pymcl.g1)

    @classmethod
    def hash(cls, data):
        return cls(pymcl.G1.hash(data.hex()))


class G2Point(_CurvePoint):
    __slots__ = ()
    tag = TAG_G2
    size = 96
    _raw = pymcl.G2

    @classmethod
    def generator(cls):
        return cls(pymcl.g2)

    @classmethod
    def hash(cls, data):
        return cls(pymcl.G2.hash(data.hex()))


class GTPoint(_Point):
    __slots__ = ()
    tag = TAG_GT
    size = 576

    def __mul__(self, other):
        if not isinstance(other, GTPoint):
            return NotImplemented
        return GTPoint(self._v * other._v)

    def __truediv__(self, other):
        if not isinstance(other, GTPoint):
            return NotImplemented
        return GTPoint(self._v / other._v)

    def __pow__(self, n):
        return GTPoint(self._v ** _fr(n))

    def inverse(self):
        return GTPoint(~self._v)

    def is_identity(self):
        return self._v.is_one()

    @classmethod
    def identity(cls):
        return cls(pymcl.GT())

    @classmethod
    def generator(cls):
        return pairing(G1Point.generator(), G2Point.generator())

    @classmethod
    def from_bytes(cls, data):
        if len(data) != cls.size:
            raise ValueError("GT encoding must be 576 bytes")
        try:
            v = pymcl.GT.deserialize(bytes(data))
        except ValueError as exc:
            raise ValueError("invalid GT encoding") from exc
        pt = cls(v)
        if not (pt ** (P - 1) * pt).is_identity():
            raise ValueError("GT element outside the order-P subgroup")
        return pt


def g1():
    return G1Point.generator()


def g2():
    return G2Point.generator()


# -- operation counters ------------------------------------------------------

_op_counts = contextvars.ContextVar("op_counts", default=None)


@contextlib.contextmanager
def count_ops():
    """Count pairings and vector multi-exponentiations inside the block."""
    counts = Counter()
    token = _op_counts.set(counts)
    try:
        yield counts
    finally:
        _op_counts.reset(token)


def _tick(name):
    counts = _op_counts.get()
    if counts is not None:
        counts[name] += 1


# -- scalar encodings ----------------------------------------------------------

def scalar_to_bytes(x):
    return (x % P).to_bytes(SCALAR_BYTES, "big")


def scalar_from_bytes(data):
    if len(data) != SCALAR_BYTES:
        raise ValueError("scalar encoding must be 32 bytes")
    x = int.from_bytes(data, "big")
    if x >= P:
        raise ValueError("scalar out of range")
    return x


def encode_scalar(x):
    return bytes([TAG_SCALAR]) + scalar_to_bytes(x)


def decode_scalar(data):
    if len(data) != SCALAR_BYTES + 1 or data[0] != TAG_SCALAR:
        raise ValueError("bad scalar encoding")
    return scalar_from_bytes(data[1:])


def inv(x):
    x %= P
    if x == 0:
        raise ZeroDivisionError("zero has no inverse mod P")
    return pow(x, -1, P)


# -- matrices ------------------------------------------------------------------

def shape(m):
    return len(m), len(m[0])


def transpose(m):
    return tuple(zip(*m))


def mat_mul(a, b):
    """Scalar matrix product mod P."""
    bt = transpose(b)
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) % P for col in bt) for row in a)


def mat_vec(a, v):
    return tuple(sum(x * y for x, y in zip(row, v)) % P for row in a)


def _check_same_shape(a, b):
    if len(a) != len(b) or any(len(ra) != len(rb) for ra, rb in zip(a, b)):
        raise ValueError("dimension mismatch")


def pairing(a, b):
    if not isinstance(a, G1Point) or not isinstance(b, G2Point):
        raise TypeError("pairing expects (G1Point, G2Point)")
    _tick("pairing")
    return GTPoint(pymcl.pairing(a._v, b._v))


def vector_pairing(u, w):
    """Product of componentwise pairings of two equal-length vectors."""
    if len(u) != len(w):
        raise ValueError("length mismatch")
    _tick("vector_pairing")
    out = pymcl.GT()
    for a, b in zip(u, w):
        out = out * pymcl.pairing(a._v, b._v)
    return GTPoint(out)


def power_multi(points, s):
    """Entrywise power: ``B[i][j] = points[i][j] ** s[i][j]``."""
    _check_same_shape(points, s)
    return tuple(tuple(x ** e for x, e in zip(rp, rs)) for rp, rs in zip(points, s))


def power_scalar(points, e):
    """Raise every entry of a point matrix to one scalar."""
    return tuple(tuple(x ** e for x in row) for row in points)


def hadamard(a, b):
    _check_same_shape(a, b)
    return tuple(tuple(x * y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def matrix_exp_base(g, m):
    return tuple(tuple(g ** e for e in row) for row in m)


def multi_exp(points, s):
    """``prod_j points[j] ** s[j]`` as one vector multi-exponentiation."""
    if len(points) != len(s):
        raise ValueError("dimension mismatch")
    _tick("multi_exp")
    out = type(points[0]).identity()
    for x, e in zip(points, s):
        if e % P:
            out = out * x ** e
    return out


def multi_exp_matvec(gm, s):
    """Group encoding of ``M s`` given ``g^M``: row i is ``prod_j gm[i][j]**s[j]``."""
    if len(gm[0]) != len(s):
        raise ValueError("dimension mismatch")
    _tick("multi_exp")
    ident = type(gm[0][0]).identity()
    out = []
    for row in gm:
        acc = ident
        for x, e in zip(row, s):
            if e % P:
                acc = acc * x ** e
        out.append(acc)
    return tuple(out)


def same_ratio(p1, p2):
    """True iff ``e(p1[0], p2[1]) == e(p1[1], p2[0])``; identity inputs are rejected."""
    a, b = p1
    c, d = p2
    if not (isinstance(a, G1Point) and isinstance(b, G1Point)):
        raise TypeError("first pair must live in G1")
    if not (isinstance(c, G2Point) and isinstance(d, G2Point)):
        raise TypeError("second pair must live in G2")
    if a.is_identity() or b.is_identity() or c.is_identity() or d.is_identity():
        raise ValueError("same_ratio is undefined on the identity")
    return pairing(a, d) == pairing(b, c)


# -- hashing oracles -----------------------------------------------------------

def _lp(data):
    return len(data).to_bytes(4, "big") + data


def commit_hash(data):
    """Deterministic map from bytes into Z_P^* (BLAKE2b, zero rejected by re-hashing)."""
    counter = 0
    while True:
        h = hashlib.blake2b(bytes([counter]) + data, digest_size=64, person=COMMIT_TAG)
        x = int.from_bytes(h.digest(), "big") % P
        if x:
            return x
        counter += 1


def hash_to_g2(domain, gid, c, index):
    msg = hashlib.blake2b(
        _lp(domain) + _lp(gid) + c.to_bytes() + index.to_bytes(2, "big"),
        digest_size=64, person=H2G2_TAG,
    ).digest()
    return G2Point.hash(msg)


def mask_oracle(shared, gid, c, length):
    prefix = shared.to_bytes() + _lp(gid) + c.to_bytes()
    out = []
    for t in range(length):
        h = hashlib.blake2b(prefix + t.to_bytes(2, "big"), digest_size=64, person=MASK_TAG)
        out.append(int.from_bytes(h.digest(), "big") % P)
    return tuple(out)


# -- structured sampling ---------------------------------------------------------

def random_scalar(rng):
    return rng.randrange(1, P)


def lin_matrix(diag):
    """(k+1) x k matrix with ``diag`` on the diagonal and a row of ones below."""
    k = len(diag)
    rows = [tuple(diag[i] if j == i else 0 for j in range(k)) for i in range(k)]
    rows.append((1,) * k)
    return tuple(rows)


def sample_lin_matrix(k, rng):
    if k < 1:
        raise ValueError("k must be >= 1")
    diag = [random_scalar(rng) for _ in range(k)]
    a_perp = tuple(inv(a) for a in diag) + (P - 1,)
    return lin_matrix(diag), a_perp


def combine_columns(points, w):
    """Column-wise combination ``out[c] = prod_q points[q][c] ** w[q]``.

    With ``points = g^M`` this is ``g^(w^T M)``, e.g. one row of ``g1^(X^T A)``.
    """
    if len(points) != len(w):
        raise ValueError("dimension mismatch")
    cols = len(points[0])
    ident = type(points[0][0]).identity()
    out = []
    for c in range(cols):
        acc = ident
        for q, e in enumerate(w):
            if e % P:
                acc = acc * points[q][c] ** e
        out.append(acc)
    return tuple(out)
