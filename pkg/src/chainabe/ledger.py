"""In-process simulation of the governance contracts.

One ``Ledger`` owns a block clock, the four contracts and a transaction
trace.  Every state-changing call goes through ``Ledger.tx``, which snapshots
state, runs the contract function and restores the snapshot if the call
rejects, so a rejected transaction never leaves partial state behind.

Mapping of the utility contract onto EVM precompiles, for an on-chain port:
``util_same_ratio`` and ``util_check_pok`` use the pairing check (0x08) and
the curve add/mul precompiles (0x06, 0x07); ``util_hash`` uses BLAKE2 (0x09).
"""

import copy
import hashlib
import json
from dataclasses import dataclass

from . import wire
from .algebra import (
    P, G1Point, G2Point, commit_hash, g1, g2, same_ratio,
)
from .pok import (
    ImagePair, PoKProof, SPair, commit_spairs, nizk_verify, proof_context,
    verify_image, verify_matrix,
)

REGISTRATION_THRESHOLD = 1_000_000

# element order inside a trusted-setup reveal and an authority reveal
SYS_ELEMENTS = ("A", "U", "alpha_A", "alpha_U", "alphaA_A", "alphaU_U")
AUTH_ELEMENTS = ("z", "alpha_z", "alphaz_z")


class Rejected(Exception):
    """A contract threw; ledger state is unchanged."""


class NotFound(LookupError):
    pass


def address(name):
    """Deterministic 20-byte simulated address for an account name."""
    return hashlib.blake2b(name.encode(), digest_size=20, person=b"cabe:addr:v1").digest()


def gid_for(addr):
    return commit_hash(bytes(addr)).to_bytes(32, "big")


@dataclass(frozen=True)
class TxContext:
    sender: bytes
    value: int
    timestamp: int


def _require(cond, msg):
    if not cond:
        raise Rejected(msg)


def util_hash(data):
    return commit_hash(data)


def util_same_ratio(p1, p2):
    return same_ratio(p1, p2)


def util_check_pok(rp, proof, h):
    return nizk_verify(rp, proof, h)


def _genesis(k):
    return tuple((g1(),) * k for _ in range(k + 1))


# -- structural checks on revealed s-pairs ----------------------------------------

def _is_matrix(x, rows, cols, cls):
    return (isinstance(x, tuple) and len(x) == rows
            and all(isinstance(r, tuple) and len(r) == cols and all(isinstance(e, cls) for e in r) for r in x))


def _check_dual(dual, k, matrix):
    """Validate one ``(rp, rp2)`` dual: fixed generators as bases and matching exponents."""
    _require(isinstance(dual, tuple) and len(dual) == 2, "element must be a dual pair")
    rp, rp2 = dual
    _require(isinstance(rp, SPair) and isinstance(rp2, SPair), "element must hold s-pairs")
    if not matrix:
        _require(rp.base == g1() and rp2.base == g2(), "s-pair bases must be the generators")
        _require(isinstance(rp.power, G1Point) and isinstance(rp2.power, G2Point), "bad s-pair powers")
        _require(not rp.power.is_identity() and not rp2.power.is_identity(), "zero secret")
        _require(same_ratio((rp.base, rp.power), (rp2.base, rp2.power)), "SameRatio failed")
        return
    rows, cols = k + 1, k
    _require(_is_matrix(rp.base, rows, cols, G1Point) and _is_matrix(rp.power, rows, cols, G1Point), "bad G1 matrix")
    _require(_is_matrix(rp2.base, rows, cols, G2Point) and _is_matrix(rp2.power, rows, cols, G2Point), "bad G2 matrix")
    _require(all(b == g1() for r in rp.base for b in r), "G1 bases must be g1")
    _require(all(b == g2() for r in rp2.base for b in r), "G2 bases must be g2")
    for r in range(rows):
        for c in range(cols):
            a, b = rp.power[r][c], rp2.power[r][c]
            if a.is_identity() or b.is_identity():
                _require(a.is_identity() and b.is_identity(), "SameRatio failed on a zero entry")
            else:
                _require(same_ratio((g1(), a), (g2(), b)), "SameRatio failed")


def _check_lin_shape(power, diag_base, k):
    """Top k rows diagonal with nonzero diagonal; bottom row all ``diag_base``."""
    for r in range(k):
        for c in range(k):
            _require(power[r][c].is_identity() != (r == c), "matrix is not k-Lin shaped")
    _require(all(e == diag_base for e in power[k]), "bottom row has wrong value")


def _check_dense(power):
    _require(all(not e.is_identity() for r in power for e in r), "matrix must have nonzero entries")


def _check_scaled(base_power, scaled_power, alpha_g2):
    """``scaled = base ** alpha`` entrywise, for every nonzero entry."""
    for rb, rs in zip(base_power, scaled_power):
        for b, s in zip(rb, rs):
            if b.is_identity():
                _require(s.is_identity(), "scaled matrix has a stray entry")
            else:
                _require(same_ratio((b, s), (g2(), alpha_g2)), "scaled matrix inconsistent")


def _verify_element_proof(rp, proof, context, matrix):
    if matrix:
        return verify_matrix(rp, proof, context)
    return isinstance(proof, PoKProof) and nizk_verify(rp, proof, context)


# -- contracts -------------------------------------------------------------------------

class _Contract:
    def __init__(self, ledger):
        self.ledger = ledger

    def snapshot(self):
        return copy.deepcopy(self.state)

    def restore(self, snap):
        self.state = snap


class SysContract(_Contract):
    """Trusted-setup commit / reveal / prove / compute / generate."""

    name = "sys"

    def __init__(self, ledger, aa_list, ddl, k):
        super().__init__(ledger)
        self.k = k
        self.state = {
            "aa_list": frozenset(aa_list),
            "ddl": tuple(ddl),
            "h_collector": {},
            "unverified_elements": {},
            "verified_elements": {},
            "V": _genesis(k), "theta_V": g1(), "V2": _genesis(k),
            "W": _genesis(k), "theta_W": g1(), "W2": _genesis(k),
            "computed": frozenset(), "generated": frozenset(),
        }

    def _auth(self, ctx):
        _require(ctx.sender in self.state["aa_list"], "sender is not an authority")

    def commit(self, ctx, h):
        self._auth(ctx)
        _require(ctx.timestamp <= self.state["ddl"][0], "commit after deadline")
        _require(isinstance(h, int) and 0 < h < P, "malformed digest")
        if ctx.sender in self.state["h_collector"]:
            return False
        self.state["h_collector"][ctx.sender] = h
        return True

    def reveal(self, ctx, elements):
        self._auth(ctx)
        _require(ctx.timestamp <= self.state["ddl"][0], "reveal after deadline")
        _require(ctx.sender in self.state["h_collector"], "no commitment")
        s = self.state
        if ctx.sender in s["unverified_elements"] or ctx.sender in s["verified_elements"]:
            return False
        _require(isinstance(elements, tuple) and len(elements) == len(SYS_ELEMENTS), "wrong element count")
        try:
            _, h = commit_spairs(elements)
        except (TypeError, AttributeError) as exc:
            raise Rejected("malformed s-pairs") from exc
        _require(h == s["h_collector"][ctx.sender], "digest mismatch")
        s["unverified_elements"][ctx.sender] = elements
        return True

    def prove(self, ctx, proofs):
        self._auth(ctx)
        d1, d2, _ = self.state["ddl"]
        _require(d1 <= ctx.timestamp <= d2, "prove outside window")
        els = self.state["unverified_elements"].get(ctx.sender)
        _require(els is not None, "nothing to verify")
        _require(isinstance(proofs, tuple) and len(proofs) == len(els), "wrong proof count")
        k = self.k
        try:
            matrix = (True, True, False, False, True, True)
            for dual, is_m in zip(els, matrix):
                _check_dual(dual, k, is_m)
            A, U, aA, aU, aAA, aUU = (d[0] for d in els)
            _check_lin_shape(A.power, g1(), k)
            _check_lin_shape(aAA.power, aA.power, k)
            _check_dense(U.power)
            _check_dense(aUU.power)
            _check_scaled(A.power, aAA.power, els[2][1].power)
            _check_scaled(U.power, aUU.power, els[3][1].power)
        except (TypeError, ValueError, AttributeError, IndexError) as exc:
            raise Rejected(f"malformed elements: {exc}") from exc
        if not self.ledger.insecure_no_pok:
            digests, _ = commit_spairs(els)
            h = self.state["h_collector"][ctx.sender]
            for dual, hs, proof, is_m in zip(els, digests, proofs, matrix):
                _require(_verify_element_proof(dual[0], proof, proof_context(h, hs), is_m), "invalid proof of knowledge")
        del self.state["unverified_elements"][ctx.sender]
        self.state["verified_elements"][ctx.sender] = els
        return True

    def _extend(self, ctx, chain, mark, M, theta, M2, idx_m, idx_alpha, idx_scaled):
        self._auth(ctx)
        _, d2, d3 = self.state["ddl"]
        _require(d2 <= ctx.timestamp <= d3, "chain update outside window")
        els = self.state["verified_elements"].get(ctx.sender)
        _require(els is not None, "sender has no verified elements")
        _require(ctx.sender not in self.state[mark], "sender already contributed")
        k = self.k
        _require(_is_matrix(M, k + 1, k, G1Point) and _is_matrix(M2, k + 1, k, G1Point), "bad chain matrix")
        _require(isinstance(theta, G1Point), "bad theta")
        cur, cur_theta, cur2 = (self.state[n] for n in chain)
        try:
            self._check_chain(cur, M, els[idx_m][1].power)
            _require(same_ratio((cur_theta, theta), (g2(), els[idx_alpha][1].power)), "theta check failed")
            self._check_chain(cur2, M2, els[idx_scaled][1].power)
        except (TypeError, ValueError) as exc:
            raise Rejected(f"chain check failed: {exc}") from exc
        for n, val in zip(chain, (M, theta, M2)):
            self.state[n] = val
        self.state[mark] = self.state[mark] | {ctx.sender}
        return True

    @staticmethod
    def _check_chain(cur, new, exps_g2):
        """Each entry of ``new`` must be the current head raised to the caller's proven exponent."""
        for rc, rn, re in zip(cur, new, exps_g2):
            for c, n, e in zip(rc, rn, re):
                if e.is_identity() or c.is_identity():
                    _require(n.is_identity(), "chain entry must stay the identity")
                else:
                    _require(same_ratio((c, n), (g2(), e)), "chain is not a proper multiple")

    def compute(self, ctx, V, theta, V2):
        return self._extend(ctx, ("V", "theta_V", "V2"), "computed", V, theta, V2, 0, 2, 4)

    def generate(self, ctx, W, theta, W2):
        return self._extend(ctx, ("W", "theta_W", "W2"), "generated", W, theta, W2, 1, 3, 5)


class AuthContract(_Contract):
    """Authority setup: commit / reveal / prove / generate over ``e'`` and slot key images."""

    name = "auth"

    def __init__(self, ledger, aa_list, ddl, k, trust):
        super().__init__(ledger)
        self.k = k
        self.state = {
            "aa_list": frozenset(aa_list),
            "ddl": tuple(ddl),
            "trust": trust,
            "h_collector": {},
            "unverified_elements": {}, "unverified_sk": {},
            "verified_elements": {}, "verified_sk": {},
            "counter": 0, "index": {},
            "verified_O": {}, "attribute_size": {},
        }

    def _auth(self, ctx):
        _require(ctx.sender in self.state["aa_list"], "sender is not an authority")

    def commit(self, ctx, h):
        self._auth(ctx)
        _require(ctx.timestamp <= self.state["ddl"][0], "commit after deadline")
        _require(isinstance(h, int) and 0 < h < P, "malformed digest")
        if ctx.sender in self.state["h_collector"]:
            return False
        self.state["h_collector"][ctx.sender] = h
        return True

    def reveal(self, ctx, sk_list, elements):
        self._auth(ctx)
        s = self.state
        _require(ctx.timestamp <= s["ddl"][0], "reveal after deadline")
        _require(ctx.sender in s["h_collector"], "no commitment")
        if ctx.sender in s["unverified_elements"] or ctx.sender in s["verified_elements"]:
            return False
        _require(isinstance(elements, tuple) and len(elements) == len(AUTH_ELEMENTS), "wrong element count")
        _require(isinstance(sk_list, tuple) and len(sk_list) >= 1, "no slot keys")
        _require(all(isinstance(t, tuple) and len(t) == 3 for t in sk_list), "slot key must be (X, tau, sigma)")
        try:
            _, h = commit_spairs(auth_commit_elements(sk_list, elements))
        except (TypeError, AttributeError) as exc:
            raise Rejected("malformed s-pairs") from exc
        _require(h == s["h_collector"][ctx.sender], "digest mismatch")
        s["unverified_elements"][ctx.sender] = elements
        s["unverified_sk"][ctx.sender] = sk_list
        return True

    def prove(self, ctx, proofs, sk_proofs):
        self._auth(ctx)
        s = self.state
        d1, d2, _ = s["ddl"]
        _require(d1 <= ctx.timestamp <= d2, "prove outside window")
        els = s["unverified_elements"].get(ctx.sender)
        _require(els is not None, "nothing to verify")
        sk_list = s["unverified_sk"][ctx.sender]
        _require(isinstance(proofs, tuple) and len(proofs) == len(els), "wrong proof count")
        _require(isinstance(sk_proofs, tuple) and len(sk_proofs) == len(sk_list), "wrong slot proof count")
        A_pub = self.ledger.sys.state["V"]
        k = self.k
        try:
            for dual in els:
                _check_dual(dual, k, False)
            z, az, azz = (d[0] for d in els)
            _require(same_ratio((z.power, azz.power), (g2(), els[1][1].power)), "alpha_z * z inconsistent")
            for rp_X, rp_tau, rp_sigma in sk_list:
                _require(isinstance(rp_X, ImagePair) and isinstance(rp_tau, ImagePair), "bad image pair")
                _require(rp_X.base == A_pub and rp_tau.base == A_pub, "image base is not the setup output")
                _require(_is_matrix(rp_X.image, k + 1, k, G1Point), "bad X image shape")
                _require(_is_matrix(rp_tau.image, 1, k, G1Point), "bad tau image shape")
                _require(isinstance(rp_sigma, SPair) and rp_sigma.base == g2(), "sigma pair must be over g2")
                _require(isinstance(rp_sigma.power, G2Point) and not rp_sigma.power.is_identity(), "bad y")
        except (TypeError, ValueError, AttributeError, IndexError) as exc:
            raise Rejected(f"malformed elements: {exc}") from exc
        if not self.ledger.insecure_no_pok:
            digests, _ = commit_spairs(auth_commit_elements(sk_list, els))
            h = s["h_collector"][ctx.sender]
            n_sk = 3 * len(sk_list)
            for dual, hs, proof in zip(els, digests[n_sk:], proofs):
                _require(_verify_element_proof(dual[0], proof, proof_context(h, hs), False), "invalid proof of knowledge")
            for t, ((rp_X, rp_tau, rp_sigma), (pX, ptau, psigma)) in enumerate(zip(sk_list, sk_proofs)):
                hX, htau, hsig = digests[3 * t:3 * t + 3]
                _require(verify_image(rp_X, pX, proof_context(h, hX)), "invalid proof for X")
                _require(verify_image(rp_tau, ptau, proof_context(h, htau)), "invalid proof for tau")
                _require(_verify_element_proof(rp_sigma, psigma, proof_context(h, hsig), False), "invalid proof for sigma")
        del s["unverified_elements"][ctx.sender]
        del s["unverified_sk"][ctx.sender]
        s["verified_elements"][ctx.sender] = els
        s["verified_sk"][ctx.sender] = sk_list
        s["counter"] += 1
        s["index"][ctx.sender] = s["counter"]
        return s["counter"]

    def generate(self, ctx, O, theta, O2, l):
        self._auth(ctx)
        s = self.state
        _, d2, d3 = s["ddl"]
        _require(d2 <= ctx.timestamp <= d3, "generate outside window")
        mine = s["verified_elements"].get(ctx.sender)
        _require(mine is not None, "sender has no verified elements")
        _require(ctx.sender not in s["attribute_size"], "already generated")
        partners = set(s["verified_elements"]) - {ctx.sender}
        _require(all(isinstance(m, dict) and set(m) == partners for m in (O, theta, O2)), "partner set mismatch")
        n_slots = len(s["verified_sk"][ctx.sender])
        _require(isinstance(l, int), "bad attribute size")
        if ctx.sender == s["trust"]:
            _require(l == 0 and n_slots == 1, "trust authority owns exactly the trust slot")
        else:
            _require(l >= 1 and l == n_slots, "attribute size must match published slot keys")
        try:
            for j in partners:
                theirs = s["verified_elements"][j]
                for t, (given, idx) in enumerate(((O, 0), (theta, 1), (O2, 2))):
                    pt = given[j]
                    _require(isinstance(pt, G1Point), "bad cross term")
                    _require(same_ratio((theirs[idx][0].power, pt), (g2(), mine[idx][1].power)), "cross term check failed")
        except (TypeError, ValueError) as exc:
            raise Rejected(f"cross term check failed: {exc}") from exc
        s["verified_O"][ctx.sender] = dict(O)
        s["attribute_size"][ctx.sender] = l
        return True


def auth_commit_elements(sk_list, elements):
    """Committed elements in digest order: every slot's (X, tau, sigma) images, then ``e'``."""
    out = []
    for triple in sk_list:
        out.extend(triple)
    out.extend(elements)
    return out


class RegContract(_Contract):
    name = "reg"

    def __init__(self, ledger, threshold):
        super().__init__(ledger)
        self.threshold = threshold
        self.state = {"collector": {}}

    def register(self, ctx):
        _require(ctx.value > self.threshold, "registration fee too low")
        gid = gid_for(ctx.sender)
        self.state["collector"][ctx.sender] = gid
        return gid


class LogContract(_Contract):
    name = "log"

    def __init__(self, ledger):
        super().__init__(ledger)
        self.state = {"entries": ()}

    def log(self, ctx, ct, kw=None):
        _require(isinstance(ct, bytes), "ciphertext must be bytes")
        _require(kw is None or isinstance(kw, str), "keyword must be a string")
        self.state["entries"] = self.state["entries"] + ((ct, kw),)
        self.ledger.emit("Log", {"index": len(self.state["entries"]) - 1, "ct": ct, "kw": kw})
        return len(self.state["entries"]) - 1

    def get(self, index):
        entries = self.state["entries"]
        if index == -1:
            return entries
        if not isinstance(index, int) or not 0 <= index < len(entries):
            raise NotFound(f"no log entry {index}")
        return entries[index]


class Ledger:
    """Single-writer simulated chain holding the governance contracts."""

    def __init__(self, aa_list, sys_ddl, auth_ddl, k=2, trust=None,
                 fee_threshold=REGISTRATION_THRESHOLD, insecure_no_pok=False, start_time=0):
        self.config = {
            "aa_list": tuple(sorted(aa_list)), "sys_ddl": tuple(sys_ddl), "auth_ddl": tuple(auth_ddl),
            "k": k, "trust": trust, "fee_threshold": fee_threshold,
            "insecure_no_pok": insecure_no_pok, "start_time": start_time,
        }
        self.k = k
        self.insecure_no_pok = insecure_no_pok
        self.now = start_time
        self.sys = SysContract(self, aa_list, sys_ddl, k)
        self.auth = AuthContract(self, aa_list, auth_ddl, k, trust)
        self.reg = RegContract(self, fee_threshold)
        self.log = LogContract(self)
        self.contracts = {c.name: c for c in (self.sys, self.auth, self.reg, self.log)}
        self.trace = []
        self.txs = []
        self._subscribers = []
        self._pending = []
        self._busy = False

    # clock
    def set_time(self, t):
        if t < self.now:
            raise ValueError("block clock cannot move backwards")
        self.now = t

    def advance(self, dt):
        self.set_time(self.now + dt)

    # events
    def subscribe(self, fn):
        self._subscribers.append(fn)

    def emit(self, name, payload):
        self._pending.append((name, payload))

    # transactions
    def tx(self, sender, function, *args, value=0):
        """Apply one transaction ``contract.function``; raises Rejected on failure."""
        if self._busy:
            raise RuntimeError("re-entrant transaction")
        cname, fname = function.split(".")
        contract = self.contracts[cname]
        ctx = TxContext(bytes(sender), value, self.now)
        snaps = {n: c.snapshot() for n, c in self.contracts.items()}
        self._pending = []
        self._busy = True
        try:
            result = getattr(contract, fname)(ctx, *args)
        except Rejected:
            for n, c in self.contracts.items():
                c.restore(snaps[n])
            self._pending = []
            self._record(ctx, function, args, False)
            raise
        finally:
            self._busy = False
        self._record(ctx, function, args, True)
        events, self._pending = self._pending, []
        self._busy = True
        try:
            for name, payload in events:
                for fn in self._subscribers:
                    fn(name, payload)
        finally:
            self._busy = False
        return result

    def _record(self, ctx, function, args, accept):
        self.txs.append((ctx.sender, function, args, ctx.value, ctx.timestamp, accept))
        self.trace.append({"sender": ctx.sender.hex(), "function": function,
                           "accept": accept, "state": self.state_hash()})

    def state_bytes(self):
        return wire.encode({n: c.state for n, c in self.contracts.items()})

    def state_hash(self):
        return hashlib.blake2b(self.state_bytes(), digest_size=32).hexdigest()

    def trace_lines(self):
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.trace)

    # read-only views
    def log_get(self, index):
        return self.log.get(index)

    def gid_of(self, addr):
        gid = self.reg.state["collector"].get(addr)
        if gid is None:
            raise NotFound("address not registered")
        return gid


__all__ = [
    "Ledger", "Rejected", "NotFound", "TxContext", "address", "gid_for",
    "util_hash", "util_same_ratio", "util_check_pok", "auth_commit_elements",
    "SYS_ELEMENTS", "AUTH_ELEMENTS",
]
