import pytest

from chainabe import abe
from chainabe.algebra import P, G1Point, GTPoint, count_ops, g1, g2, mat_mul, transpose
from support import (
    central_params, central_system, issue_keys, random_commitment, random_gid, satisfying_instance,
    unsatisfying_instance,
)


def test_slot_keygen_zero_fixture(rng):
    params, *_ = central_params(2, rng)
    zero = abe.SlotSecret(((0,) * 3,) * 3, (0, 0, 0), 5)
    pub = abe.slot_public(params, zero)
    assert all(e.is_identity() for row in pub.XA_pub for e in row)
    assert all(e.is_identity() for e in pub.tauA_pub)


def test_slot_keygen_matches_exponent_oracle(rng):
    params, A, _, _ = central_params(2, rng)
    pub, sec = abe.slot_keygen(params, rng)
    XtA = mat_mul(transpose(sec.X), A)
    assert pub.XA_pub == tuple(tuple(g1() ** e for e in row) for row in XtA)
    tauA = [sum(sec.tau[q] * A[q][c] for q in range(3)) % P for c in range(2)]
    assert pub.tauA_pub == tuple(GTPoint.generator() ** e for e in tauA)
    assert pub.y == g2() ** sec.sigma
    other, _ = abe.slot_keygen(params, rng)
    assert other != pub


def test_derive_h(rng):
    c = random_commitment(rng)
    assert abe.derive_h(b"a", c, 2) == abe.derive_h(b"a", c, 2)
    assert abe.derive_h(b"a", c, 2) != abe.derive_h(b"b", c, 2)
    assert abe.derive_h(b"a", c, 2) != abe.derive_h(b"a", c * g1(), 2)
    assert len(abe.derive_h(b"a", c, 3)) == 4


def test_masking_cases(rng):
    gid, c = random_gid(rng), random_commitment(rng)
    s0 = 7
    assert abe.masking(0, s0, (g2() ** s0,), gid, c, 3) == (0, 0, 0)
    sig = [rng.randrange(1, P) for _ in range(2)]
    ys = tuple(g2() ** s for s in sig)
    m0 = abe.masking(0, sig[0], ys, gid, c, 3)
    m1 = abe.masking(1, sig[1], ys, gid, c, 3)
    assert all((a + b) % P == 0 for a, b in zip(m0, m1))
    with pytest.raises(abe.AbeError):
        abe.masking(0, sig[1], ys, gid, c, 3)


def test_masking_cancels_l5(rng):
    sig = [rng.randrange(1, P) for _ in range(5)]
    ys = tuple(g2() ** s for s in sig)
    gid, c = random_gid(rng), random_commitment(rng)
    mus = [abe.masking(j, s, ys, gid, c, 3) for j, s in enumerate(sig)]
    assert all(sum(col) % P == 0 for col in zip(*mus))


def test_issue_key_part_forms(rng):
    params, *_ = central_params(2, rng)
    _, sec = abe.slot_keygen(params, rng)
    h_exp = [rng.randrange(P) for _ in range(3)]
    h_pub = tuple(g2() ** e for e in h_exp)
    mu = tuple(rng.randrange(P) for _ in range(3))
    k0 = abe.issue_key_part(sec, 0, h_pub, mu, 0)
    assert k0.K == tuple(g2() ** ((t + m) % P) for t, m in zip(sec.tau, mu))
    k1 = abe.issue_key_part(sec, 1, h_pub, mu, 0)
    Xh = [sum(sec.X[r][t] * h_exp[t] for t in range(3)) for r in range(3)]
    assert k1.K == tuple(g2() ** ((sec.tau[r] - Xh[r] + mu[r]) % P) for r in range(3))
    zero_X = abe.SlotSecret(((0,) * 3,) * 3, sec.tau, sec.sigma)
    assert abe.issue_key_part(zero_X, 0, h_pub, mu, 0) == abe.issue_key_part(zero_X, 1, h_pub, mu, 0)


def test_trust_slot_refuses_v0(rng):
    params, *_ = central_params(1, rng)
    _, sec = abe.slot_keygen(params, rng)
    h = (g2(), g2())
    with pytest.raises(abe.AbeError):
        abe.issue_key_part(sec, 0, h, (0, 0), 3, trust=True)
    with pytest.raises(abe.AbeError):
        abe.issue_key_part(sec, 2, h, (0, 0), 3)


def test_encode_policy(rng):
    x = abe.encode_policy({0, 1}, 6, rng, naive=True)
    assert x == (1, 1, 0, 0, 0, P - 2)
    assert abe.inner(x, (1, 1, 0, 1, 0, 1)) == 0
    assert abe.inner(x, (1, 0, 0, 1, 0, 1)) != 0
    # corrupt probe satisfies the naive encoding only
    assert abe.inner(x, (2, 0, 0, 0, 0, 1)) == 0
    xr = abe.encode_policy({0, 1}, 6, rng)
    assert abe.inner(xr, (2, 0, 0, 0, 0, 1)) != 0
    assert abe.inner(xr, (1, 1, 0, 1, 0, 1)) == 0
    assert sum(xr) % P == 0
    assert abe.encode_policy(set(), 4, rng) == (0, 0, 0, 0)
    with pytest.raises(abe.AbeError):
        abe.encode_policy({5}, 6, rng)


def test_encrypt_edge_cases(rng):
    params, pubs, _ = central_system(2, 3, rng)
    with pytest.raises(abe.AbeError):
        abe.encrypt(params, pubs, (0, 0, 0), GTPoint.generator(), rng, s=(0, 0))
    s = (3, 4)
    ct = abe.encrypt(params, pubs, (0, 0, 0), GTPoint.generator(), rng, s=s)
    for i, pub in enumerate(pubs):
        assert ct.cts[i] == tuple(
            pub.XA_pub[r][0] ** s[0] * pub.XA_pub[r][1] ** s[1] for r in range(3))
    with pytest.raises(abe.AbeError):
        abe.encrypt(params, pubs, (0, 0), GTPoint.generator(), rng)


def test_roundtrip_and_intermediate_identity(rng):
    k, L = 2, 5
    params, pubs, secrets = central_system(k, L, rng)
    _, x, v = satisfying_instance(L, rng)
    gid, c = random_gid(rng), random_commitment(rng)
    parts, h = issue_keys(secrets, pubs, v, gid, c, k)
    M = abe.random_payload(rng)
    s = (rng.randrange(1, P), rng.randrange(1, P))
    ct = abe.encrypt(params, pubs, x, M, rng, s=s)
    assert abe.decrypt(parts, v, h, ct) == M
    # the pairing product equals prod_i e(g1, g2)^(tau_i^T A s), recomputed by the encryptor
    mask = GTPoint.identity()
    for pub in pubs:
        mask = mask * pub.tauA_pub[0] ** s[0] * pub.tauA_pub[1] ** s[1]
    assert ct.ct_prime / M == mask


def test_decrypt_fails_when_unsatisfied(rng):
    k, L = 2, 4
    params, pubs, secrets = central_system(k, L, rng)
    for _ in range(5):
        _, x, v = unsatisfying_instance(L, rng)
        parts, h = issue_keys(secrets, pubs, v, random_gid(rng), random_commitment(rng), k)
        M = abe.random_payload(rng)
        assert abe.decrypt(parts, v, h, abe.encrypt(params, pubs, x, M, rng)) != M


def test_mixed_identity_keys_fail(rng):
    k, L = 2, 4
    params, pubs, secrets = central_system(k, L, rng)
    x = abe.encode_policy({0, 1}, L, rng)
    v = (1, 1, 0, 1)
    a, ha = issue_keys(secrets, pubs, v, random_gid(rng), random_commitment(rng), k)
    b, hb = issue_keys(secrets, pubs, v, random_gid(rng), random_commitment(rng), k)
    M = abe.random_payload(rng)
    ct = abe.encrypt(params, pubs, x, M, rng)
    assert abe.decrypt(a, v, ha, ct) == M
    mixed = (a[0], b[1], a[2], a[3])
    assert abe.decrypt(mixed, v, ha, ct) != M
    assert abe.decrypt(mixed, v, hb, ct) != M


def test_operation_counts(rng):
    for L in (3, 6):
        params, pubs, secrets = central_system(2, L, rng)
        _, x, v = satisfying_instance(L, rng)
        parts, h = issue_keys(secrets, pubs, v, random_gid(rng), random_commitment(rng), 2)
        with count_ops() as enc:
            ct = abe.encrypt(params, pubs, x, abe.random_payload(rng), rng)
        with count_ops() as dec:
            abe.decrypt(parts, v, h, ct)
        assert enc["multi_exp"] == 2 * L + 1
        assert dec["vector_pairing"] == 2 and dec["pairing"] == 0
        assert dec["exp_group"] <= 2 * L


def test_ciphertext_wire_format(rng):
    params, pubs, _ = central_system(2, 3, rng)
    ct = abe.encrypt(params, pubs, abe.encode_policy({0}, 3, rng), abe.random_payload(rng), rng)
    data = ct.to_bytes()
    assert data[0] == abe.CT_VERSION and data[1:5] == b"\x00\x02\x00\x03"
    assert abe.AbeCiphertext.from_bytes(data) == ct
    with pytest.raises(abe.AbeError):
        abe.AbeCiphertext.from_bytes(data[:-1])
    with pytest.raises(ValueError):
        abe.AbeCiphertext.from_bytes(data[:5] + G1Point.identity().to_bytes()[:-1] + b"\x05" + data[53:])
