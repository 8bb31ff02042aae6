"""Fixture builders shared by the test modules."""

import copy
import random
from dataclasses import dataclass

from chainabe import abe
from chainabe.algebra import g1, matrix_exp_base, random_scalar, sample_lin_matrix
from chainabe.ceremony import (
    AuthorityNode, AuthorityParticipant, DataUser, SetupParticipant, default_ledger, issue_all,
    make_setup_contribution, run_authority_setup, run_trusted_setup, system_params_from_ledger,
)
from chainabe.ledger import Ledger, Rejected, address
from chainabe.storage import MemoryCAS, SharingSystem

# filled by the acceptance suite, printed in the terminal summary
ACCEPTANCE_LINES = []


def central_params(k, rng):
    """System parameters from known exponents: ``g1^A`` and a dense stand-in ``g1^W``."""
    A, a_perp = sample_lin_matrix(k, rng)
    W = tuple(tuple(random_scalar(rng) for _ in range(k)) for _ in range(k + 1))
    return abe.SystemParams(matrix_exp_base(g1(), A), matrix_exp_base(g1(), W), k), A, W, a_perp


def central_system(k, L, rng):
    params, A, W, _ = central_params(k, rng)
    keys = [abe.slot_keygen(params, rng) for _ in range(L)]
    return params, tuple(p for p, _ in keys), tuple(s for _, s in keys)


def random_gid(rng):
    return rng.getrandbits(256).to_bytes(32, "big")


def random_commitment(rng):
    return g1() ** random_scalar(rng)


def issue_keys(secrets, pubs, v, gid, c, k):
    """One key part per slot bound to ``(gid, c)``; returns ``(key_parts, h_pub)``."""
    h_pub = abe.derive_h(gid, c, k)
    all_y = tuple(p.y for p in pubs)
    L = len(secrets)
    parts = tuple(
        abe.issue_key_part(s, v[j], h_pub, abe.masking(j, s.sigma, all_y, gid, c, k + 1), j, trust=j == L - 1)
        for j, s in enumerate(secrets)
    )
    return parts, h_pub


def satisfying_instance(L, rng):
    """Random required set, policy vector and an attribute vector that satisfies it."""
    required = {i for i in range(L - 1) if rng.random() < 0.5}
    v = [1 if i in required or rng.random() < 0.5 else 0 for i in range(L - 1)] + [1]
    x = abe.encode_policy(required, L, rng)
    return required, x, tuple(v)


def unsatisfying_instance(L, rng):
    required = set(rng.sample(range(L - 1), rng.randint(1, L - 1)))
    missing = rng.choice(sorted(required))
    v = [1 if i in required and i != missing else rng.randint(0, 1) for i in range(L - 1)] + [1]
    v[missing] = 0
    x = abe.encode_policy(required, L, rng)
    return required, x, tuple(v)


def seeded(n):
    return random.Random(n)


ROSTER = (("AA1", ("entry", "mid", "senior")), ("AA2", ("agent", "manager")))


@dataclass
class Deployment:
    ledger: object
    params: object
    vc_params: object
    pubs: tuple
    table: object
    authorities: list
    system: SharingSystem
    rng: random.Random
    _nodes: list = None

    def nodes(self):
        """One issuing node per authority; grants persist across calls."""
        if self._nodes is None:
            all_y = tuple(p.y for p in self.pubs)
            self._nodes = [
                AuthorityNode(self.table.by_address(a.address), a.contribution.slot_secrets, self.vc_params,
                              all_y, self.params.k, ledger=self.ledger)
                for a in self.authorities
            ]
        return self._nodes

    def user(self, name, held):
        """Register ``name``, have every authority grant ``held`` and issue all key parts."""
        addr = address(name)
        gid = self.ledger.tx(addr, "reg.register", value=self.ledger.reg.threshold + 1)
        user = DataUser(addr, gid, self.table, self.vc_params, frozenset(held), self.rng)
        nodes = self.nodes()
        for node in nodes:
            if not node.record.trust:
                node.grant(gid, set(held) & set(node.record.attributes))
        return issue_all(user, nodes)


def deploy(seed=0, roster=ROSTER, k=2):
    """Trusted setup plus authority setup over ``roster`` and a trust authority."""
    rng = random.Random(seed)
    names = [n for n, _ in roster] + ["TRUST"]
    addrs = [address(n) for n in names]
    ledger = default_ledger(addrs, trust=addrs[-1], k=k)
    params, _ = run_trusted_setup(
        [SetupParticipant(a, make_setup_contribution(k, rng)) for a in addrs], ledger, rng, strict=True)
    auths = [AuthorityParticipant(a, n, attrs) for a, (n, attrs) in zip(addrs, roster)]
    auths.append(AuthorityParticipant(addrs[-1], "TRUST", (), trust=True))
    vc_params, pubs, table, _ = run_authority_setup(auths, ledger, params, rng, strict=True)
    system = SharingSystem(params, pubs, table, MemoryCAS(), ledger)
    return Deployment(ledger, params, vc_params, pubs, table, auths, system, rng)


# -- ledger stages --------------------------------------------------------------------

SYS_DDL = (100, 200, 300)
AUTH_DDL = (400, 500, 600)
K = 1
ALICE, BOB, TRUST = address("alice"), address("bob"), address("trust")
OUTSIDER = address("mallory")


class LedgerStages:
    """Ledger snapshots at each ceremony stage, built once and copied per test."""

    def __init__(self):
        rng = random.Random(7)
        self.rng = rng
        members = (ALICE, BOB, TRUST)
        led = Ledger(members, SYS_DDL, AUTH_DDL, k=K, trust=TRUST)
        self.contrib = {a: make_setup_contribution(K, rng) for a in members}
        self.proofs = {a: c.proofs(rng) for a, c in self.contrib.items()}
        self.fresh = copy.deepcopy(led)
        for a in members:
            led.tx(a, "sys.commit", self.contrib[a].h)
        self.sys_committed = copy.deepcopy(led)
        for a in members:
            led.tx(a, "sys.reveal", self.contrib[a].elements)
        self.sys_revealed = copy.deepcopy(led)
        led.set_time(SYS_DDL[0])
        for a in members:
            led.tx(a, "sys.prove", self.proofs[a])
        self.sys_proved = copy.deepcopy(led)
        led.set_time(SYS_DDL[1])
        for a in members:
            s = led.sys.state
            led.tx(a, "sys.compute", *self.contrib[a].compute(s["V"], s["theta_V"], s["V2"]))
            led.tx(a, "sys.generate", *self.contrib[a].generate(s["W"], s["theta_W"], s["W2"]))
        self.sys_done = copy.deepcopy(led)
        self.params = system_params_from_ledger(led)

        self.auth = {
            ALICE: AuthorityParticipant(ALICE, "AA1", ("a", "b")).prepare(self.params, rng),
            BOB: AuthorityParticipant(BOB, "AA2", ("c",)).prepare(self.params, rng),
            TRUST: AuthorityParticipant(TRUST, "TA", (), trust=True).prepare(self.params, rng),
        }
        self.auth_proofs = {a: p.contribution.proofs(rng) for a, p in self.auth.items()}
        led.set_time(SYS_DDL[2])
        for a in members:
            led.tx(a, "auth.commit", self.auth[a].contribution.h)
        self.auth_committed = copy.deepcopy(led)
        for a in members:
            c = self.auth[a].contribution
            led.tx(a, "auth.reveal", c.sk_list, c.elements)
        self.auth_revealed = copy.deepcopy(led)
        led.set_time(AUTH_DDL[0])
        self.indices = [led.tx(a, "auth.prove", *self.auth_proofs[a]) for a in (BOB, TRUST, ALICE)]
        self.auth_proved = copy.deepcopy(led)

    def get(self, name):
        return copy.deepcopy(getattr(self, name))

    def call_args(self, fn, led, sender=ALICE):
        c = self.contrib[sender]
        s = led.sys.state
        if fn == "sys.commit":
            return (c.h,)
        if fn == "sys.reveal":
            return (c.elements,)
        if fn == "sys.prove":
            return (self.proofs[sender],)
        if fn == "sys.compute":
            return c.compute(s["V"], s["theta_V"], s["V2"])
        if fn == "sys.generate":
            return c.generate(s["W"], s["theta_W"], s["W2"])
        a = self.auth[sender]
        if fn == "auth.commit":
            return (a.contribution.h,)
        if fn == "auth.reveal":
            return (a.contribution.sk_list, a.contribution.elements)
        if fn == "auth.prove":
            return self.auth_proofs[sender]
        if fn == "auth.generate":
            ver = led.auth.state["verified_elements"]
            partners = {ad: els for ad, els in ver.items() if ad != sender}
            return (*a.contribution.cross_terms(partners), len(a.attributes))
        raise AssertionError(fn)


# (function, stage the call starts from, deadline, side of the window the deadline closes)
EDGES = [
    ("sys.commit", "fresh", SYS_DDL[0], "upper"),
    ("sys.reveal", "sys_committed", SYS_DDL[0], "upper"),
    ("sys.prove", "sys_revealed", SYS_DDL[0], "lower"),
    ("sys.prove", "sys_revealed", SYS_DDL[1], "upper"),
    ("sys.compute", "sys_proved", SYS_DDL[1], "lower"),
    ("sys.compute", "sys_proved", SYS_DDL[2], "upper"),
    ("sys.generate", "sys_proved", SYS_DDL[1], "lower"),
    ("sys.generate", "sys_proved", SYS_DDL[2], "upper"),
    ("auth.commit", "sys_done", AUTH_DDL[0], "upper"),
    ("auth.reveal", "auth_committed", AUTH_DDL[0], "upper"),
    ("auth.prove", "auth_revealed", AUTH_DDL[0], "lower"),
    ("auth.prove", "auth_revealed", AUTH_DDL[1], "upper"),
    ("auth.generate", "auth_proved", AUTH_DDL[1], "lower"),
    ("auth.generate", "auth_proved", AUTH_DDL[2], "upper"),
]


def attempt(stages, fn, stage, t, sender=ALICE):
    led = stages.get(stage)
    led.set_time(max(led.now, t))
    before = led.state_bytes()
    try:
        led.tx(sender, fn, *stages.call_args(fn, led, sender))
        return True
    except Rejected:
        assert led.state_bytes() == before
        return False


# every sys and auth contract mutation, with a stage and time at which the call is otherwise valid
MUTATIONS = [
    ("sys.commit", "fresh", 0), ("sys.reveal", "sys_committed", 0), ("sys.prove", "sys_revealed", SYS_DDL[0]),
    ("sys.compute", "sys_proved", SYS_DDL[1]), ("sys.generate", "sys_proved", SYS_DDL[1]),
    ("auth.commit", "sys_done", SYS_DDL[2]), ("auth.reveal", "auth_committed", SYS_DDL[2]),
    ("auth.prove", "auth_revealed", AUTH_DDL[0]), ("auth.generate", "auth_proved", AUTH_DDL[1]),
]
