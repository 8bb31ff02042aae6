"""Executable adversaries: the rogue-key forgery and secret-vector inference.

Both come with a runner that builds a small system, mounts the attack and
returns a JSON-serialisable verdict.  ``success`` means the adversary got
what it wanted; on the default configuration both should report False.
"""

import random
import time
from dataclasses import dataclass

from . import abe
from .algebra import P, G1Point, g1, g2, inv, multi_exp_matvec, random_scalar, vector_pairing
from .ceremony import (
    AuthorityNode, AuthorityParticipant, AuthContribution, DataUser, build_mapping_table,
    authority_outputs_from_ledger, default_ledger, make_setup_contribution, run_trusted_setup,
    SetupParticipant, sk_images,
)
from .ledger import Rejected, address, auth_commit_elements
from .pok import ImagePair, LinearPoK, commit_spairs, make_dual, nizk_prove, proof_context, prove_image
from .storage import (
    DemAuthError, MemoryCAS, Metadata, SealedMetadata, SharingSystem, dem_decrypt, kem_key, share_file,
)


# -- rogue key -------------------------------------------------------------------------

@dataclass(frozen=True)
class RogueSlotPublic:
    """Forged slot key: ``XA_pub`` cancels every honest slot, ``tau`` and ``sigma`` are known."""

    XA_pub: tuple
    tau: tuple
    sigma: int


def rogue_key_forge(honest_XA, k, rng):
    """Entrywise inverse of the product of the honest non-trust ``XA_pub`` matrices.

    Only group operations on published values are used; no discrete log is needed.
    """
    acc = [[G1Point.identity()] * k for _ in range(k + 1)]
    for XA in honest_XA:
        for r in range(k + 1):
            for c in range(k):
                acc[r][c] = acc[r][c] * XA[r][c]
    forged = tuple(tuple(e.inverse() for e in row) for row in acc)
    tau = tuple(rng.randrange(P) for _ in range(k + 1))
    return RogueSlotPublic(forged, tau, random_scalar(rng))


def rogue_key_decrypt(ct, key_parts, h_pub):
    """Decrypt as the all-zero user, then cancel the trust-slot policy term with ``omega``.

    ``omega = prod_{i < L-1} ct_i`` carries ``-x_{L-1} U^T A s`` once the forged
    key has removed every ``X_i^T A s``.
    """
    L = ct.L
    v = (0,) * (L - 1) + (1,)
    residual = abe.decrypt(key_parts, v, h_pub, ct)
    omega = list(ct.cts[0])
    for row in ct.cts[1:L - 1]:
        omega = [a * b for a, b in zip(omega, row)]
    return residual / vector_pairing(omega, h_pub)


def _forged_image_proof(pair, rng):
    """Best effort without the witness: a random transcript."""
    k1 = len(pair.base)
    return tuple(
        LinearPoK(tuple(g1() ** random_scalar(rng) for _ in row), tuple(random_scalar(rng) for _ in range(k1)))
        for row in pair.image
    )


def run_rogue_key(insecure_no_pok=False, seed=0, forge=True, naive_policy=False):
    """Full rogue-key scenario; ``forge=False`` is the control run with an honest rogue key."""
    t0 = time.perf_counter()
    rng = random.Random(seed)
    k = 2
    names = ["AA1", "AA2", "ROGUE", "TRUST"]
    addrs = {n: address(n) for n in names}
    ledger = default_ledger(list(addrs.values()), trust=addrs["TRUST"], k=k, insecure_no_pok=insecure_no_pok)
    setup = [SetupParticipant(addrs[n], make_setup_contribution(k, rng)) for n in names]
    params, _ = run_trusted_setup(setup, ledger, rng, strict=True)

    honest = [
        AuthorityParticipant(addrs["AA1"], "AA1", ("entry", "mid", "senior")),
        AuthorityParticipant(addrs["AA2"], "AA2", ("agent",)),
        AuthorityParticipant(addrs["TRUST"], "TRUST", (), trust=True),
    ]
    for a in honest:
        a.prepare(params, rng)
    ledger.set_time(ledger.sys.state["ddl"][2])
    for a in honest:
        ledger.tx(a.address, "auth.commit", a.contribution.h)
        ledger.tx(a.address, "auth.reveal", a.contribution.sk_list, a.contribution.elements)

    # the rogue waits for every honest reveal, then publishes its key
    rogue_addr = addrs["ROGUE"]
    honest_XA = [sk[0].image for a in honest if not a.trust for sk in ledger.auth.state["unverified_sk"][a.address]]
    if forge:
        forged = rogue_key_forge(honest_XA, k, rng)
        rogue_secret = abe.SlotSecret(tuple((0,) * (k + 1) for _ in range(k + 1)), forged.tau, forged.sigma)
        _, rp_tau, rp_sigma = sk_images(params.A_pub, rogue_secret)
        rp_X = ImagePair(params.A_pub, forged.XA_pub)
    else:
        rogue_secret = abe.random_slot_secret(k, rng)
        rp_X, rp_tau, rp_sigma = sk_images(params.A_pub, rogue_secret)
    z, az = random_scalar(rng), random_scalar(rng)
    secrets = (z, az, az * z % P)
    elements = tuple(make_dual(s, g1(), g2()) for s in secrets)
    sk_list = ((rp_X, rp_tau, rp_sigma),)
    digests, h = commit_spairs(auth_commit_elements(sk_list, elements))
    rogue = AuthorityParticipant(rogue_addr, "ROGUE", ("manager",))
    rogue.contribution = AuthContribution(secrets, elements, (rogue_secret,), sk_list, digests, h)
    ledger.tx(rogue_addr, "auth.commit", h)
    ledger.tx(rogue_addr, "auth.reveal", sk_list, elements)

    ledger.set_time(ledger.auth.state["ddl"][0])
    for a in honest:
        ledger.tx(a.address, "auth.prove", *a.contribution.proofs(rng))
    e_proofs = tuple(nizk_prove(d[0], s, proof_context(h, hs), rng) for s, d, hs in zip(secrets, elements, digests[3:]))
    if forge:
        pX = _forged_image_proof(rp_X, rng)
    else:
        pX = prove_image(rp_X, rogue_secret.X, proof_context(h, digests[0]), rng)
    sk_proofs = ((pX, prove_image(rp_tau, rogue_secret.tau, proof_context(h, digests[1]), rng),
                  nizk_prove(rp_sigma, rogue_secret.sigma, proof_context(h, digests[2]), rng)),)
    verdict = {
        "attack": "rogue-key",
        "config": {"insecure_no_pok": insecure_no_pok, "forged": forge, "seed": seed,
                   "policy": "naive" if naive_policy else "randomized"},
    }
    try:
        ledger.tx(rogue_addr, "auth.prove", e_proofs, sk_proofs)
    except Rejected as exc:
        verdict.update(success=False, rejected_at="auth.prove", reason=str(exc),
                       elapsed_s=round(time.perf_counter() - t0, 3))
        return verdict

    everyone = honest[:2] + [rogue, honest[2]]
    ledger.set_time(ledger.auth.state["ddl"][1])
    s = ledger.auth.state
    for a in everyone:
        partners = {ad: els for ad, els in s["verified_elements"].items() if ad != a.address}
        ledger.tx(a.address, "auth.generate", *a.contribution.cross_terms(partners), 0 if a.trust else len(a.attributes))
    table = build_mapping_table(everyone, ledger.auth.state["index"])
    vc_params, pubs = authority_outputs_from_ledger(ledger, table)

    # owner shares a file needing two honest attributes
    cas = MemoryCAS()
    system = SharingSystem(params, pubs, table, cas, ledger)
    owner = address("owner")
    secret_file = b"quarterly figures"
    idx = share_file(secret_file, {"entry", "agent"}, system, rng, owner, naive=naive_policy)

    # colluding user holds no attributes at all
    colluder = address("colluder")
    gid = ledger.tx(colluder, "reg.register", value=ledger.reg.threshold + 1)
    all_y = tuple(p.y for p in pubs)
    user = DataUser(colluder, gid, table, vc_params, frozenset(), rng)
    for a in everyone:
        rec = table.by_address(a.address)
        node = AuthorityNode(rec, a.contribution.slot_secrets, vc_params, all_y, k, ledger=ledger)
        user.accept(node.handle(user.request_for(rec)))
    h_pub = user.h_pub(k)
    sealed = SealedMetadata.from_bytes(ledger.log_get(idx)[0])
    element = rogue_key_decrypt(sealed.abe_ct, user.ordered_key_parts(), h_pub)
    try:
        meta = Metadata.from_bytes(dem_decrypt(kem_key(element), sealed.dem))
        success = dem_decrypt(meta.ak, cas.get(meta.loc)) == secret_file
    except DemAuthError:
        success = False
    verdict.update(success=success, rejected_at=None, elapsed_s=round(time.perf_counter() - t0, 3))
    return verdict


# -- secret-vector inference ----------------------------------------------------------------

@dataclass(frozen=True)
class InferenceWitness:
    """The A-diagonal ``(a_1, ..., a_k)`` an adversary believes generated ``g1^A``."""

    a: tuple


def infer_secret_vector(ct0, witness):
    """``g1^s_i = ct0[i] ** (1 / a_i)`` for the top k coordinates."""
    return tuple(ct0[i] ** inv(a) for i, a in enumerate(witness.a))


def composite_diagonal(contributions):
    k = contributions[0].k
    out = [1] * k
    for c in contributions:
        for i in range(k):
            out[i] = out[i] * c.A[i][i] % P
    return tuple(out)


def run_infer(seed=0, participants=3, trials=100):
    """Full-witness inference on central and ceremony parameters, then every withheld-contribution variant."""
    t0 = time.perf_counter()
    rng = random.Random(seed)
    k = 2
    addrs = [address(f"P{i}") for i in range(participants)]
    ledger = default_ledger(addrs, trust=addrs[-1], k=k)
    contribs = [make_setup_contribution(k, rng) for _ in addrs]
    params, _ = run_trusted_setup([SetupParticipant(a, c) for a, c in zip(addrs, contribs)], ledger, rng, strict=True)

    def attempt(witness):
        s = tuple(random_scalar(rng) for _ in range(k))
        ct0 = multi_exp_matvec(params.A_pub, s)
        return infer_secret_vector(ct0, witness) == tuple(g1() ** e for e in s)

    full = InferenceWitness(composite_diagonal(contribs))
    full_hits = sum(attempt(full) for _ in range(trials))
    withheld = {}
    for w in range(participants):
        known = [c for i, c in enumerate(contribs) if i != w]
        guess = InferenceWitness(composite_diagonal(known))
        withheld[w] = sum(attempt(guess) for _ in range(trials))
    return {
        "attack": "infer-s",
        "config": {"seed": seed, "participants": participants, "trials": trials},
        "full_witness_matches": full_hits,
        "withheld_matches": withheld,
        "success": full_hits == trials,
        "mitigated": all(v == 0 for v in withheld.values()),
        "elapsed_s": round(time.perf_counter() - t0, 3),
    }
