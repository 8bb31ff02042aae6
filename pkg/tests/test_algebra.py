import random

import pytest
from hypothesis import given, settings, strategies as st

from chainabe import algebra as al
from chainabe.algebra import (
    P, G1Point, G2Point, GTPoint, commit_hash, g1, g2, hash_to_g2, mask_oracle, matrix_exp_base,
    multi_exp_matvec, mat_vec, pairing, power_multi, same_ratio, sample_lin_matrix, vector_pairing,
)

scalars = st.integers(min_value=1, max_value=P - 1)
gt = GTPoint.generator


def test_pairing_bilinear_small():
    assert pairing(g1() ** 2, g2() ** 3) == gt() ** 6


def test_pairing_identity():
    assert pairing(G1Point.identity(), g2()).is_identity()


@settings(max_examples=20, deadline=None)
@given(scalars, scalars)
def test_pairing_matches_gt_exponent(a, b):
    assert pairing(g1() ** a, g2() ** b) == gt() ** (a * b)


def test_pairing_bilinear_100(rng):
    base = gt()
    for _ in range(100):
        a, b = rng.randrange(P), rng.randrange(P)
        assert pairing(g1() ** a, g2() ** b) == base ** (a * b % P)


def test_pairing_rejects_wrong_groups():
    with pytest.raises(TypeError):
        pairing(g2(), g1())


def test_vector_pairing():
    assert vector_pairing((g1(), g1()), (g2(), g2())) == gt() ** 2
    assert vector_pairing((g1() ** 5,), (g2() ** 7,)) == pairing(g1() ** 5, g2() ** 7)
    with pytest.raises(ValueError):
        vector_pairing((g1(),), (g2(), g2()))


def test_vector_pairing_componentwise(rng):
    u = [g1() ** rng.randrange(P) for _ in range(3)]
    w = [g2() ** rng.randrange(P) for _ in range(3)]
    expect = pairing(u[0], w[0]) * pairing(u[1], w[1]) * pairing(u[2], w[2])
    assert vector_pairing(u, w) == expect


def test_power_multi(rng):
    G = matrix_exp_base(g1(), ((1, 2), (3, 4)))
    assert power_multi(G, ((1, 1), (1, 1))) == G
    assert all(e.is_identity() for row in power_multi(G, ((0, 0), (0, 0))) for e in row)
    s = tuple(tuple(rng.randrange(P) for _ in range(2)) for _ in range(2))
    out = power_multi(G, s)
    for i in range(2):
        for j in range(2):
            assert out[i][j] == G[i][j] ** s[i][j]
    with pytest.raises(ValueError):
        power_multi(G, ((1, 2),))


def test_power_multi_commutes(rng):
    G = tuple(tuple(g1() ** rng.randrange(P) for _ in range(2)) for _ in range(3))
    s1 = tuple(tuple(rng.randrange(P) for _ in range(2)) for _ in range(3))
    s2 = tuple(tuple(rng.randrange(P) for _ in range(2)) for _ in range(3))
    assert power_multi(power_multi(G, s1), s2) == power_multi(power_multi(G, s2), s1)


def test_matrix_exp_base(rng):
    zero = matrix_exp_base(g1(), ((0, 0), (0, 0)))
    assert all(e.is_identity() for row in zero for e in row)
    ident = matrix_exp_base(g1(), ((1, 0), (0, 1)))
    assert ident[0][0] == g1() and ident[1][0].is_identity()
    M = tuple(tuple(rng.randrange(P) for _ in range(2)) for _ in range(3))
    out = matrix_exp_base(g2(), M)
    assert all(out[i][j] == g2() ** M[i][j] for i in range(3) for j in range(2))


def test_multi_exp_matvec(rng):
    M = tuple(tuple(rng.randrange(P) for _ in range(2)) for _ in range(3))
    GM = matrix_exp_base(g1(), M)
    assert multi_exp_matvec(GM, (0, 1)) == tuple(row[1] for row in GM)
    assert all(e.is_identity() for e in multi_exp_matvec(GM, (0, 0)))
    s = (rng.randrange(P), rng.randrange(P))
    assert multi_exp_matvec(GM, s) == tuple(g1() ** e for e in mat_vec(M, s))
    with pytest.raises(ValueError):
        multi_exp_matvec(GM, (1, 2, 3))


def test_same_ratio_basic():
    assert same_ratio((g1(), g1() ** 5), (g2(), g2() ** 5))
    assert not same_ratio((g1(), g1() ** 5), (g2(), g2() ** 6))
    with pytest.raises(ValueError):
        same_ratio((G1Point.identity(), g1()), (g2(), g2()))


def test_same_ratio_sound_and_complete(rng):
    for _ in range(20):
        a, b = rng.randrange(1, P), rng.randrange(1, P)
        base1, base2 = g1() ** rng.randrange(1, P), g2() ** rng.randrange(1, P)
        assert same_ratio((base1, base1 ** a), (base2, base2 ** a))
        assert same_ratio((base1, base1 ** a), (base2, base2 ** b)) == (a == b)


def test_same_ratio_matrix_extension(rng):
    s = tuple(tuple(rng.randrange(1, P) for _ in range(2)) for _ in range(3))
    A1 = tuple((g1(),) * 2 for _ in range(3))
    A2 = tuple((g2(),) * 2 for _ in range(3))
    B1, B2 = power_multi(A1, s), power_multi(A2, s)
    checks = [same_ratio((A1[i][j], B1[i][j]), (A2[i][j], B2[i][j])) for i in range(3) for j in range(2)]
    assert all(checks)
    B2_bad = power_multi(A2, ((s[0][0] + 1, s[0][1]),) + s[1:])
    assert not same_ratio((A1[0][0], B1[0][0]), (A2[0][0], B2_bad[0][0]))


def test_commit_hash():
    assert commit_hash(b"abc") == commit_hash(b"abc")
    assert commit_hash(b"abc") != commit_hash(b"abd")
    assert 0 < commit_hash(b"") < P


def test_hash_to_g2():
    c = g1() ** 3
    assert hash_to_g2(b"d", b"gid", c, 1) == hash_to_g2(b"d", b"gid", c, 1)
    assert hash_to_g2(b"d", b"gid", c, 1) != hash_to_g2(b"d", b"gid", g1() ** 4, 1)
    pts = {hash_to_g2(b"d", b"gid", c, i).to_bytes() for i in range(1, 101)}
    assert len(pts) == 100


def test_mask_oracle_symmetric(rng):
    a, b = rng.randrange(1, P), rng.randrange(1, P)
    ya, yb = g2() ** a, g2() ** b
    c = g1() ** 9
    assert mask_oracle(yb ** a, b"gid", c, 3) == mask_oracle(ya ** b, b"gid", c, 3)
    assert mask_oracle(yb ** a, b"gid", c, 3) != mask_oracle(yb ** a, b"gie", c, 3)
    assert len(mask_oracle(ya, b"", c, 4)) == 4


def test_oracles_domain_separated():
    seen = set()
    rnd = random.Random(7)
    c = g1()
    for _ in range(10_000):
        data = rnd.getrandbits(128).to_bytes(16, "big")
        seen.add(commit_hash(data))
        seen.add(mask_oracle(g2(), data, c, 1)[0])
    assert len(seen) == 20_000


def test_sample_lin_matrix(rng):
    A, a_perp = sample_lin_matrix(1, rng)
    assert A[1] == (1,) and a_perp == (al.inv(A[0][0]), P - 1)
    for k in (1, 2, 3):
        A, a_perp = sample_lin_matrix(k, rng)
        assert len(A) == k + 1 and all(len(r) == k for r in A)
        assert all(A[i][j] == 0 for i in range(k) for j in range(k) if i != j)
        assert all(A[i][i] != 0 for i in range(k))
        assert A[k] == (1,) * k
        assert mat_vec(al.transpose(A), a_perp) == (0,) * k
    with pytest.raises(ValueError):
        sample_lin_matrix(0, rng)


def test_point_encodings_roundtrip(rng):
    for cls, gen in ((G1Point, g1), (G2Point, g2), (GTPoint, gt)):
        x = gen() ** rng.randrange(P)
        assert cls.decode(x.encode()) == x
        assert len(x.to_bytes()) == cls.size
    assert al.decode_scalar(al.encode_scalar(12345)) == 12345
    with pytest.raises(ValueError):
        al.scalar_from_bytes(P.to_bytes(32, "big"))


def test_rejects_bad_point_bytes():
    with pytest.raises(ValueError):
        G1Point.from_bytes(b"\x01" * 48)
    with pytest.raises(ValueError):
        GTPoint.from_bytes(b"\x07" * 576)


def test_count_ops():
    with al.count_ops() as c:
        pairing(g1(), g2())
        vector_pairing((g1(),), (g2(),))
        al.multi_exp((g1(),), (3,))
    assert c == {"pairing": 1, "vector_pairing": 1, "multi_exp": 1}
