"""Participant logic and drivers for the two setup ceremonies and key issuance.

Trusted setup: each participant commits to, reveals and proves knowledge of
its secrets, then extends two public chains elementwise.  The chain heads
after the last contribution are ``g1^A`` and the stand-in for ``g1^(U^T A)``.

Authority setup: each authority proves knowledge of its ``z`` (for the vector
commitment) and of one ``(X, tau, sigma)`` per owned slot, then publishes the
cross terms ``g1^(z_i z_j)`` for every partner.
"""

from dataclasses import dataclass, field

from . import wire
from .abe import SlotPublic, SystemParams, derive_h, issue_key_part, masking, random_slot_secret
from .algebra import (
    P, G1Point, g1, g2, lin_matrix, pairing, power_multi, random_scalar,
)
from .ledger import Ledger, NotFound, Rejected, auth_commit_elements
from .pok import (
    commit_spairs, make_dual, make_image_pair, make_spair, nizk_prove, proof_context,
    prove_image, prove_matrix,
)
from .vc import VCParams, assemble_params, vc_commit, vc_message, vc_open, vc_verify

DEFAULT_SYS_DDL = (100, 200, 300)
DEFAULT_AUTH_DDL = (400, 500, 600)


class CeremonyError(Exception):
    pass


class IssuanceRefused(Exception):
    pass


# -- trusted setup ---------------------------------------------------------------

def _scale(m, a):
    return tuple(tuple(e * a % P for e in row) for row in m)


@dataclass
class SetupContribution:
    """Secrets ``e = (A, U, alpha_A, alpha_U, alpha_A*A, alpha_U*U)``, their duals and digest."""

    k: int
    secrets: tuple
    elements: tuple
    digests: tuple
    h: int

    @property
    def A(self):
        return self.secrets[0]

    @property
    def U(self):
        return self.secrets[1]

    def proofs(self, rng):
        out = []
        for secret, dual, hs in zip(self.secrets, self.elements, self.digests):
            ctx = proof_context(self.h, hs)
            if isinstance(secret, int):
                out.append(nizk_prove(dual[0], secret, ctx, rng))
            else:
                out.append(prove_matrix(dual[0], secret, ctx, rng))
        return tuple(out)

    def compute(self, V, theta, V2):
        _, _, aA, _, aAA, _ = self.secrets
        return power_multi(V, self.A), theta ** aA, power_multi(V2, aAA)

    def generate(self, W, theta, W2):
        _, U, _, aU, _, aUU = self.secrets
        return power_multi(W, U), theta ** aU, power_multi(W2, aUU)


def make_setup_contribution(k, rng):
    if k < 1:
        raise ValueError("k must be >= 1")
    A = lin_matrix([random_scalar(rng) for _ in range(k)])
    U = tuple(tuple(random_scalar(rng) for _ in range(k)) for _ in range(k + 1))
    aA, aU = random_scalar(rng), random_scalar(rng)
    secrets = (A, U, aA, aU, _scale(A, aA), _scale(U, aU))
    elements = tuple(make_dual(s, g1(), g2()) for s in secrets)
    digests, h = commit_spairs(elements)
    return SetupContribution(k, secrets, elements, digests, h)


@dataclass
class SetupParticipant:
    """A ceremony participant; ``skip`` names stages it fails to show up for."""

    address: bytes
    contribution: SetupContribution
    skip: frozenset = frozenset()

    def compute_args(self, V, theta, V2):
        return self.contribution.compute(V, theta, V2)

    def generate_args(self, W, theta, W2):
        return self.contribution.generate(W, theta, W2)


def _try(ledger, rejected, sender, fn, *args):
    try:
        return ledger.tx(sender, fn, *args)
    except Rejected as exc:
        rejected.append((sender, fn, str(exc)))
        return None


def system_params_from_ledger(ledger):
    s = ledger.sys.state
    return SystemParams(s["V"], s["W"], ledger.k)


def run_trusted_setup(participants, ledger, rng, strict=False):
    """Drive commit, reveal, prove, compute and generate through the ledger.

    Returns ``(SystemParams, rejected)``; rejected lists ``(address, function,
    reason)``.  With ``strict`` the first rejection raises CeremonyError.
    """
    rejected = []
    d1, d2, _ = ledger.sys.state["ddl"]

    def run(stage, p, fn, *args):
        if stage in p.skip:
            return
        n = len(rejected)
        _try(ledger, rejected, p.address, fn, *args)
        if strict and len(rejected) > n:
            raise CeremonyError(f"{p.address.hex()} rejected in {fn}: {rejected[-1][2]}")

    for p in participants:
        run("commit", p, "sys.commit", p.contribution.h)
    for p in participants:
        run("reveal", p, "sys.reveal", p.contribution.elements)
    ledger.set_time(max(ledger.now, d1))
    for p in participants:
        run("prove", p, "sys.prove", p.contribution.proofs(rng))
    ledger.set_time(max(ledger.now, d2))
    # a rejected tx restores a snapshot, so always re-read the live state
    def state():
        return ledger.sys.state

    for p in participants:
        if "compute" not in p.skip and p.address in state()["verified_elements"]:
            s = state()
            run("compute", p, "sys.compute", *p.compute_args(s["V"], s["theta_V"], s["V2"]))
    for p in participants:
        if "generate" not in p.skip and p.address in state()["verified_elements"]:
            s = state()
            run("generate", p, "sys.generate", *p.generate_args(s["W"], s["theta_W"], s["W2"]))
    if not state()["computed"] or not state()["generated"]:
        raise CeremonyError("no participant completed the trusted setup")
    return system_params_from_ledger(ledger), rejected


# -- authority setup ---------------------------------------------------------------

@dataclass
class AuthContribution:
    """``e' = (z, alpha_z, alpha_z*z)`` plus one slot secret per owned slot."""

    secrets: tuple
    elements: tuple
    slot_secrets: tuple
    sk_list: tuple
    digests: tuple
    h: int

    @property
    def z(self):
        return self.secrets[0]

    def proofs(self, rng):
        n_sk = 3 * len(self.sk_list)
        e_proofs = tuple(
            nizk_prove(dual[0], s, proof_context(self.h, hs), rng)
            for s, dual, hs in zip(self.secrets, self.elements, self.digests[n_sk:])
        )
        sk_proofs = []
        for t, (sec, (rp_X, rp_tau, rp_sigma)) in enumerate(zip(self.slot_secrets, self.sk_list)):
            hX, htau, hsig = self.digests[3 * t:3 * t + 3]
            sk_proofs.append((
                prove_image(rp_X, sec.X, proof_context(self.h, hX), rng),
                prove_image(rp_tau, sec.tau, proof_context(self.h, htau), rng),
                nizk_prove(rp_sigma, sec.sigma, proof_context(self.h, hsig), rng),
            ))
        return e_proofs, tuple(sk_proofs)

    def cross_terms(self, partner_elements):
        """``(O, theta, O')`` keyed by partner address from their verified ``e'`` pairs."""
        z, az, azz = self.secrets
        O, theta, O2 = {}, {}, {}
        for addr, els in partner_elements.items():
            O[addr] = els[0][0].power ** z
            theta[addr] = els[1][0].power ** az
            O2[addr] = els[2][0].power ** azz
        return O, theta, O2


def sk_images(A_pub, secret):
    return (make_image_pair(A_pub, secret.X), make_image_pair(A_pub, secret.tau),
            make_spair(g2(), secret.sigma))


def make_auth_contribution(params, n_slots, rng, slot_secrets=None):
    z, az = random_scalar(rng), random_scalar(rng)
    secrets = (z, az, az * z % P)
    elements = tuple(make_dual(s, g1(), g2()) for s in secrets)
    if slot_secrets is None:
        slot_secrets = tuple(random_slot_secret(params.k, rng) for _ in range(n_slots))
    sk_list = tuple(sk_images(params.A_pub, sec) for sec in slot_secrets)
    digests, h = commit_spairs(auth_commit_elements(sk_list, elements))
    return AuthContribution(secrets, elements, tuple(slot_secrets), sk_list, digests, h)


@dataclass
class AuthorityParticipant:
    address: bytes
    name: str
    attributes: tuple
    contribution: AuthContribution = None
    trust: bool = False
    skip: frozenset = frozenset()

    def prepare(self, params, rng):
        n = 1 if self.trust else len(self.attributes)
        self.contribution = make_auth_contribution(params, n, rng)
        return self


@wire.record
@dataclass(frozen=True)
class AuthorityRecord:
    address: bytes
    name: str
    index: int
    position: int
    slot_start: int
    attributes: tuple
    trust: bool

    @property
    def slots(self):
        n = 1 if self.trust else len(self.attributes)
        return range(self.slot_start, self.slot_start + n)


@wire.record
@dataclass(frozen=True)
class MappingTable:
    """Address -> authority -> attribute slots; the trust authority owns slot ``l`` alone."""

    records: tuple

    @property
    def l(self):
        return sum(len(r.attributes) for r in self.records if not r.trust)

    @property
    def L(self):
        return self.l + 1

    def attributes(self):
        return tuple(a for r in self.records if not r.trust for a in r.attributes)

    def slot_of(self, attribute):
        for r in self.records:
            if not r.trust and attribute in r.attributes:
                return r.slot_start + r.attributes.index(attribute)
        raise KeyError(f"unknown attribute {attribute!r}")

    def by_address(self, addr):
        for r in self.records:
            if r.address == addr:
                return r
        raise KeyError("unknown authority")

    def by_name(self, name):
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(f"unknown authority {name!r}")

    @property
    def trust_record(self):
        return next(r for r in self.records if r.trust)


def build_mapping_table(authorities, index):
    """Order authorities by ledger index with the trust authority last and assign slots."""
    regular = sorted((a for a in authorities if not a.trust), key=lambda a: index[a.address])
    trust = [a for a in authorities if a.trust]
    if len(trust) != 1:
        raise CeremonyError("exactly one trust authority required")
    records, slot = [], 0
    for pos, a in enumerate(regular):
        records.append(AuthorityRecord(a.address, a.name, index[a.address], pos, slot, tuple(a.attributes), False))
        slot += len(a.attributes)
    t = trust[0]
    records.append(AuthorityRecord(t.address, t.name, index[t.address], len(regular), slot, (), True))
    return MappingTable(tuple(records))


def slot_public_from_images(sk):
    rp_X, rp_tau, rp_sigma = sk
    return SlotPublic(rp_X.image, tuple(pairing(p, g2()) for p in rp_tau.image[0]), rp_sigma.power)


def authority_outputs_from_ledger(ledger, table):
    """Reassemble VC parameters and per-slot public keys from verified ledger state."""
    s = ledger.auth.state
    recs = table.records
    o = tuple(s["verified_elements"][r.address][0][0].power for r in recs)
    z_pub = tuple(s["verified_elements"][r.address][0][1].power for r in recs)
    cross = {}
    for i, ri in enumerate(recs):
        for j, rj in enumerate(recs):
            if i != j:
                cross[(i, j)] = s["verified_O"][ri.address][rj.address]
    vc_params = assemble_params(o, cross, z_pub)
    pubs = []
    for r in recs:
        pubs.extend(slot_public_from_images(sk) for sk in s["verified_sk"][r.address])
    return vc_params, tuple(pubs)


def run_authority_setup(authorities, ledger, params, rng, strict=False):
    """Drive commit, reveal, prove and generate for every authority; returns ``(VCParams, slot publics, MappingTable, rejected)``.

    Authorities that miss a stage or are rejected are left out of the table.
    """
    rejected = []
    d1, d2, _ = ledger.auth.state["ddl"]
    for a in authorities:
        if a.contribution is None:
            a.prepare(params, rng)

    def run(stage, a, fn, *args):
        if stage in a.skip:
            return
        n = len(rejected)
        _try(ledger, rejected, a.address, fn, *args)
        if strict and len(rejected) > n:
            raise CeremonyError(f"{a.name} rejected in {fn}: {rejected[-1][2]}")

    ledger.set_time(max(ledger.now, ledger.sys.state["ddl"][2]))
    for a in authorities:
        run("commit", a, "auth.commit", a.contribution.h)
    for a in authorities:
        run("reveal", a, "auth.reveal", a.contribution.sk_list, a.contribution.elements)
    ledger.set_time(max(ledger.now, d1))
    for a in authorities:
        run("prove", a, "auth.prove", *a.contribution.proofs(rng))
    ledger.set_time(max(ledger.now, d2))
    verified = ledger.auth.state["verified_elements"]
    for a in authorities:
        if a.address not in verified:
            continue
        partners = {addr: els for addr, els in verified.items() if addr != a.address}
        l = 0 if a.trust else len(a.attributes)
        run("generate", a, "auth.generate", *a.contribution.cross_terms(partners), l)
    s = ledger.auth.state
    done = [a for a in authorities if a.address in s["attribute_size"]]
    if not any(a.trust for a in done):
        raise CeremonyError("trust authority did not complete authority setup")
    # an authority whose partner dropped out before generate has stale cross terms
    live = set(s["verified_elements"])
    done = [a for a in done if set(s["verified_O"][a.address]) == live - {a.address}]
    if len(done) != len(live):
        raise CeremonyError("authority setup incomplete: some verified authorities never generated")
    table = build_mapping_table(done, s["index"])
    vc_params, pubs = authority_outputs_from_ledger(ledger, table)
    return vc_params, pubs, table, rejected


def assemble_user_attribute_vector(table, issued):
    """Attribute vector from acknowledged attributes; the trust slot is always 1.

    ``issued`` is either a flat collection of attribute names or a mapping from
    authority address to the names that authority acknowledged.
    """
    v = [0] * table.L
    if isinstance(issued, dict):
        for addr, names in issued.items():
            rec = table.by_address(addr)
            for name in names:
                if name not in rec.attributes:
                    raise KeyError(f"{name!r} is not managed by {rec.name}")
                v[table.slot_of(name)] = 1
    else:
        for name in issued:
            v[table.slot_of(name)] = 1
    v[table.L - 1] = 1
    return tuple(v)


# -- key issuance ------------------------------------------------------------------

def slice_bits(record, held):
    """Authority-local bit string in table order, '1' for a held attribute."""
    if record.trust:
        return "1"
    return "".join("1" if a in held else "0" for a in record.attributes)


@dataclass
class KeyRequest:
    gid: bytes
    c: G1Point
    bits: str
    opening: object


@dataclass
class DataUser:
    """Holds a GID, a vector commitment to its attribute slices, and collected key parts."""

    address: bytes
    gid: bytes
    table: MappingTable
    vc_params: VCParams
    held: frozenset
    rng: object
    nonces: dict = field(default_factory=dict)
    key_parts: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.held) - set(self.table.attributes())
        if unknown:
            raise KeyError(f"unknown attributes {sorted(unknown)}")
        self.bits = [slice_bits(r, self.held) for r in self.table.records]
        self.nonces = {r.position: random_scalar(self.rng) for r in self.table.records}
        self.msgs = [vc_message(b, self.nonces[i]) for i, b in enumerate(self.bits)]
        self.c = vc_commit(self.vc_params, self.msgs)

    def request_for(self, record):
        i = record.position
        return KeyRequest(self.gid, self.c, self.bits[i], vc_open(self.vc_params, self.msgs, i, self.nonces[i]))

    def accept(self, parts):
        for kp in parts:
            self.key_parts[kp.slot] = kp

    def attribute_vector(self):
        return assemble_user_attribute_vector(self.table, self.held)

    def h_pub(self, k):
        return derive_h(self.gid, self.c, k)

    def ordered_key_parts(self):
        if set(self.key_parts) != set(range(self.table.L)):
            raise IssuanceRefused("missing key parts for some slots")
        return tuple(self.key_parts[i] for i in range(self.table.L))


@dataclass
class AuthorityNode:
    """Issues key parts for its slots after checking the user's commitment opening."""

    record: AuthorityRecord
    slot_secrets: tuple
    vc_params: VCParams
    all_y: tuple
    k: int
    grants: dict = field(default_factory=dict)
    ledger: Ledger = None

    def grant(self, gid, names):
        bad = set(names) - set(self.record.attributes)
        if bad:
            raise KeyError(f"{sorted(bad)} not managed by {self.record.name}")
        self.grants[gid] = frozenset(names)

    def handle(self, req):
        rec = self.record
        if self.ledger is not None:
            gids = set(self.ledger.reg.state["collector"].values())
            if req.gid not in gids:
                raise IssuanceRefused("GID is not registered")
        if len(req.bits) != (1 if rec.trust else len(rec.attributes)):
            raise IssuanceRefused("slice length does not match the authority")
        m = vc_message(req.bits, req.opening.nonce)
        if not vc_verify(self.vc_params, req.c, m, rec.position, req.opening):
            raise IssuanceRefused("commitment opening rejected")
        if rec.trust:
            if req.bits != "1":
                raise IssuanceRefused("trust slot requires attribute value 1")
        else:
            allowed = self.grants.get(req.gid, frozenset())
            claimed = {a for a, b in zip(rec.attributes, req.bits) if b == "1"}
            if not claimed <= allowed:
                raise IssuanceRefused("user claims attributes it was not granted")
        h_pub = derive_h(req.gid, req.c, self.k)
        parts = []
        for offset, (slot, secret) in enumerate(zip(rec.slots, self.slot_secrets)):
            mu = masking(slot, secret.sigma, self.all_y, req.gid, req.c, self.k + 1)
            v = int(req.bits[offset])
            parts.append(issue_key_part(secret, v, h_pub, mu, slot, trust=rec.trust))
        return parts


def issue_all(user, nodes):
    for node in nodes:
        user.accept(node.handle(user.request_for(node.record)))
    return user


def default_ledger(addresses, trust, k=2, **kw):
    return Ledger(addresses, DEFAULT_SYS_DDL, DEFAULT_AUTH_DDL, k=k, trust=trust, **kw)


# -- transcripts -------------------------------------------------------------------

TRANSCRIPT_VERSION = 1


class TranscriptError(Exception):
    pass


def export_transcript(ledger, extra=None):
    """Replayable record: ledger config, every transaction, and the final state hash."""
    return wire.encode({
        "version": TRANSCRIPT_VERSION,
        "config": ledger.config,
        "txs": tuple(ledger.txs),
        "state": ledger.state_hash(),
        "extra": extra or {},
    })


def replay_transcript(data):
    """Re-run every transaction into a fresh ledger; raises TranscriptError on divergence."""
    try:
        doc = wire.decode(data)
    except (ValueError, TypeError) as exc:
        raise TranscriptError(f"unreadable transcript: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != TRANSCRIPT_VERSION:
        raise TranscriptError("unsupported transcript version")
    cfg = dict(doc["config"])
    ledger = Ledger(cfg.pop("aa_list"), cfg.pop("sys_ddl"), cfg.pop("auth_ddl"), **cfg)
    for n, (sender, fn, args, value, ts, accept) in enumerate(doc["txs"]):
        try:
            ledger.set_time(ts)
        except ValueError as exc:
            raise TranscriptError(f"tx {n}: timestamps go backwards") from exc
        try:
            ledger.tx(sender, fn, *args, value=value)
            ok = True
        except Rejected:
            ok = False
        except (NotFound, KeyError, TypeError, ValueError) as exc:
            raise TranscriptError(f"tx {n}: malformed transaction: {exc}") from exc
        if ok != accept:
            raise TranscriptError(f"tx {n} ({fn}): outcome differs from the recorded one")
    if ledger.state_hash() != doc["state"]:
        raise TranscriptError("final state hash differs")
    return ledger, doc.get("extra", {})
