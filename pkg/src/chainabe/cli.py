"""Command-line driver over a state directory.

Layout of ``--state DIR``::

    config.ini        roster, k, deadlines, fee threshold, seed
    ledger.bin        replayable ledger transcript (re-verified on every load)
    public.bin        system params, slot publics, VC params, mapping table
    secrets/NAME.bin  per-authority slot secrets
    users/NAME.bin    per-user commitment openings and key parts
    cas/              content-addressed blobs
"""

import argparse
import configparser
import json
import os
import random
import sys

from . import attacks, wire
from .abe import derive_h
from .algebra import CURVE
from .ceremony import (
    AuthorityNode, AuthorityParticipant, CeremonyError, DataUser, IssuanceRefused, SetupParticipant,
    TranscriptError, assemble_user_attribute_vector, export_transcript, make_setup_contribution,
    replay_transcript, run_authority_setup, run_trusted_setup, system_params_from_ledger,
)
from .ledger import Ledger, NotFound, Rejected, address
from .storage import DirectoryCAS, PolicyDenied, SharingSystem, retrieve_file, share_file

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DENIED = 3
EXIT_REJECTED = 4
EXIT_NOT_FOUND = 5
EXIT_TRANSCRIPT = 6

EXAMPLE_ROSTER = (("AA1", ("entry", "mid", "senior")), ("AA2", ("agent", "manager")))


class ConfigError(Exception):
    pass


# -- config -------------------------------------------------------------------------

def default_roster(n):
    if n < 2:
        raise ConfigError("need at least one attribute authority plus the trust authority")
    if n == 3:
        return list(EXAMPLE_ROSTER)
    return [(f"AA{i}", (f"attr{i}",)) for i in range(1, n)]


def write_config(path, roster, k, seed, fee, insecure_no_pok=False):
    cp = configparser.ConfigParser()
    cp["system"] = {
        "k": str(k), "curve": CURVE, "fee_threshold": str(fee),
        "sys_deadlines": "100,200,300", "auth_deadlines": "400,500,600",
        "insecure_no_pok": str(insecure_no_pok).lower(),
    }
    if seed is not None:
        cp["system"]["seed"] = str(seed)
    for name, attrs in roster:
        cp[f"authority {name}"] = {"attributes": ", ".join(attrs)}
    cp["authority TRUST"] = {"trust": "true"}
    with open(path, "w") as f:
        cp.write(f)


def _ints(text, n):
    vals = [int(x) for x in text.split(",")]
    if len(vals) != n or vals != sorted(vals):
        raise ConfigError(f"expected {n} nondecreasing integers, got {text!r}")
    return tuple(vals)


def load_config(path):
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"missing config {path}")
    try:
        s = cp["system"]
        curve = s.get("curve", CURVE).lower()
        if curve != CURVE:
            raise ConfigError(f"curve {curve!r} is not supported; only {CURVE} is available")
        cfg = {
            "k": s.getint("k", 2),
            "fee_threshold": s.getint("fee_threshold", 1_000_000),
            "sys_ddl": _ints(s.get("sys_deadlines", "100,200,300"), 3),
            "auth_ddl": _ints(s.get("auth_deadlines", "400,500,600"), 3),
            "insecure_no_pok": s.getboolean("insecure_no_pok", False),
            "seed": s.getint("seed") if "seed" in s else None,
        }
        roster, trust = [], []
        for sec in cp.sections():
            if not sec.startswith("authority "):
                continue
            name = sec.split(" ", 1)[1].strip()
            if cp[sec].getboolean("trust", False):
                trust.append(name)
            else:
                attrs = tuple(a.strip() for a in cp[sec].get("attributes", "").split(",") if a.strip())
                if not attrs:
                    raise ConfigError(f"authority {name} declares no attributes")
                roster.append((name, attrs))
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["k"] < 1:
        raise ConfigError("k must be >= 1")
    if len(trust) != 1 or not roster:
        raise ConfigError("need exactly one trust authority and at least one attribute authority")
    if cfg["sys_ddl"][2] > cfg["auth_ddl"][0]:
        raise ConfigError("authority setup deadlines must follow the trusted setup")
    all_attrs = [a for _, attrs in roster for a in attrs]
    if len(set(all_attrs)) != len(all_attrs):
        raise ConfigError("attribute names must be unique")
    cfg["roster"] = roster
    cfg["trust"] = trust[0]
    return cfg


# -- state directory ------------------------------------------------------------------

class State:
    def __init__(self, root):
        self.root = root
        self.cfg = load_config(self.path("config.ini"))
        self.ledger = None
        self.extra = {}

    def path(self, *parts):
        return os.path.join(self.root, *parts)

    def rng(self, label):
        seed = self.cfg["seed"]
        if seed is None:
            return random.SystemRandom()
        n = len(self.ledger.txs) if self.ledger else 0
        return random.Random(f"{seed}:{label}:{n}")

    def new_ledger(self):
        c = self.cfg
        names = [n for n, _ in c["roster"]] + [c["trust"]]
        self.ledger = Ledger([address(n) for n in names], c["sys_ddl"], c["auth_ddl"], k=c["k"],
                             trust=address(c["trust"]), fee_threshold=c["fee_threshold"],
                             insecure_no_pok=c["insecure_no_pok"])
        return self.ledger

    def load_ledger(self):
        try:
            with open(self.path("ledger.bin"), "rb") as f:
                data = f.read()
        except FileNotFoundError:
            raise NotFound("no ledger yet; run `setup` first") from None
        self.ledger, self.extra = replay_transcript(data)
        return self.ledger

    def save_ledger(self):
        _write(self.path("ledger.bin"), export_transcript(self.ledger))

    def read(self, *parts):
        try:
            with open(self.path(*parts), "rb") as f:
                return wire.decode(f.read())
        except FileNotFoundError:
            raise NotFound(f"missing {os.path.join(*parts)}") from None

    def write(self, obj, *parts):
        os.makedirs(os.path.dirname(self.path(*parts)), exist_ok=True)
        _write(self.path(*parts), wire.encode(obj))

    def cas(self):
        return DirectoryCAS(self.path("cas"))


def _write(path, data):
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def _names(text):
    return [a.strip() for a in text.split(",") if a.strip()]


# -- commands -------------------------------------------------------------------------

def cmd_setup(args):
    os.makedirs(args.state, exist_ok=True)
    cfg_path = os.path.join(args.state, "config.ini")
    if args.config:
        with open(args.config) as src, open(cfg_path, "w") as dst:
            dst.write(src.read())
    elif not os.path.exists(cfg_path) or args.authorities:
        write_config(cfg_path, default_roster(args.authorities or 3), args.k, args.seed, args.fee,
                     args.insecure_no_pok)
    st = State(args.state)
    if os.path.exists(st.path("ledger.bin")):
        st.load_ledger()
        if st.ledger.sys.state["computed"]:
            print("trusted setup already complete")
            return EXIT_OK
    ledger = st.new_ledger()
    rng = st.rng("setup")
    names = [n for n, _ in st.cfg["roster"]] + [st.cfg["trust"]]
    parts = [SetupParticipant(address(n), make_setup_contribution(st.cfg["k"], rng)) for n in names]
    params, rejected = run_trusted_setup(parts, ledger, rng)
    st.save_ledger()
    print(json.dumps({"participants": len(parts), "rejected": len(rejected), "state": ledger.state_hash()}))
    return EXIT_OK


def cmd_authority_setup(args):
    st = State(args.state)
    ledger = st.load_ledger()
    if ledger.auth.state["attribute_size"]:
        print("authority setup already complete")
        return EXIT_OK
    params = system_params_from_ledger(ledger)
    rng = st.rng("authority-setup")
    auths = [AuthorityParticipant(address(n), n, attrs) for n, attrs in st.cfg["roster"]]
    auths.append(AuthorityParticipant(address(st.cfg["trust"]), st.cfg["trust"], (), trust=True))
    vc_params, pubs, table, rejected = run_authority_setup(auths, ledger, params, rng)
    for a in auths:
        st.write(a.contribution.slot_secrets, "secrets", f"{a.name}.bin")
    st.write({"params": params, "pubs": pubs, "vc": vc_params, "table": table}, "public.bin")
    st.save_ledger()
    print(json.dumps({"L": table.L, "authorities": [r.name for r in table.records],
                      "attributes": list(table.attributes()), "rejected": len(rejected)}))
    return EXIT_OK


def cmd_register(args):
    st = State(args.state)
    ledger = st.load_ledger()
    addr = address(args.user)
    try:
        gid = ledger.tx(addr, "reg.register", value=args.fee)
    finally:
        st.save_ledger()
    st.write({"name": args.user, "gid": gid}, "users", f"{args.user}.bin")
    print(json.dumps({"user": args.user, "gid": gid.hex()}))
    return EXIT_OK


def _public(st):
    pub = st.read("public.bin")
    return pub["params"], pub["pubs"], pub["vc"], pub["table"]


def cmd_keygen(args):
    st = State(args.state)
    ledger = st.load_ledger()
    params, pubs, vc_params, table = _public(st)
    user = st.read("users", f"{args.user}.bin")
    held = frozenset(_names(args.attributes))
    rng = st.rng(f"keygen:{args.user}")
    du = DataUser(address(args.user), user["gid"], table, vc_params, held, rng)
    all_y = tuple(p.y for p in pubs)
    for rec in table.records:
        node = AuthorityNode(rec, st.read("secrets", f"{rec.name}.bin"), vc_params, all_y, params.k, ledger=ledger)
        # authorities acknowledge the requested attributes they manage
        node.grant(du.gid, held & set(rec.attributes))
        du.accept(node.handle(du.request_for(rec)))
    user.update({"held": tuple(sorted(held)), "c": du.c, "key_parts": du.ordered_key_parts()})
    st.write(user, "users", f"{args.user}.bin")
    print(json.dumps({"user": args.user, "attributes": sorted(held), "key_parts": table.L}))
    return EXIT_OK


def cmd_share(args):
    st = State(args.state)
    ledger = st.load_ledger()
    params, pubs, _, table = _public(st)
    with open(args.file, "rb") as f:
        data = f.read()
    system = SharingSystem(params, pubs, table, st.cas(), ledger)
    idx = share_file(data, set(_names(args.policy)), system, st.rng("share"), address(args.owner), kw=args.keyword)
    st.save_ledger()
    print(json.dumps({"index": idx, "bytes": len(data), "policy": _names(args.policy)}))
    return EXIT_OK


def cmd_retrieve(args):
    st = State(args.state)
    ledger = st.load_ledger()
    params, _, _, table = _public(st)
    user = st.read("users", f"{args.user}.bin")
    if "key_parts" not in user:
        raise NotFound(f"user {args.user} has no keys; run `keygen` first")
    entries = ledger.log_get(-1)
    idx = args.index if args.index is not None else len(entries) - 1
    entry = ledger.log_get(idx)
    v = assemble_user_attribute_vector(table, user["held"])
    data = retrieve_file(entry, user["key_parts"], v, derive_h(user["gid"], user["c"], params.k), st.cas())
    if args.out:
        _write(args.out, data)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


def cmd_attack(args):
    if args.attack == "rogue-key":
        verdict = attacks.run_rogue_key(insecure_no_pok=args.insecure_no_pok, seed=args.seed or 0)
    else:
        verdict = attacks.run_infer(seed=args.seed or 0, trials=args.trials)
    print(json.dumps(verdict, sort_keys=True, default=str))
    return EXIT_OK


def cmd_verify_transcript(args):
    path = args.file or os.path.join(args.state, "ledger.bin")
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise NotFound(f"no transcript at {path}") from None
    ledger, _ = replay_transcript(data)
    print(json.dumps({"ok": True, "transactions": len(ledger.txs), "state": ledger.state_hash()}))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="chainabe", description=__doc__.splitlines()[0])
    p.add_argument("--state", default="./chainabe-state", help="state directory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("setup", help="write config and run the trusted setup ceremony")
    s.add_argument("--authorities", type=int, help="total authorities including the trust authority")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--seed", type=int)
    s.add_argument("--fee", type=int, default=1_000_000, help="registration threshold (simulated GWEI)")
    s.add_argument("--config", help="use this INI file instead of generating one")
    s.add_argument("--insecure-no-pok", action="store_true", help="disable proof-of-knowledge checks (demo only)")
    s.set_defaults(fn=cmd_setup)

    s = sub.add_parser("authority-setup", help="run the authority setup ceremony")
    s.set_defaults(fn=cmd_authority_setup)

    s = sub.add_parser("register", help="register a data user")
    s.add_argument("--user", required=True)
    s.add_argument("--fee", type=int, default=1_000_001)
    s.set_defaults(fn=cmd_register)

    s = sub.add_parser("keygen", help="obtain key parts from every authority")
    s.add_argument("--user", required=True)
    s.add_argument("--attributes", default="", help="comma-separated attributes the user holds")
    s.set_defaults(fn=cmd_keygen)

    s = sub.add_parser("share", help="encrypt, store and log a file")
    s.add_argument("--policy", required=True, help="comma-separated required attributes")
    s.add_argument("--owner", default="owner")
    s.add_argument("--keyword")
    s.add_argument("file")
    s.set_defaults(fn=cmd_share)

    s = sub.add_parser("retrieve", help="decrypt a logged file")
    s.add_argument("--user", required=True)
    s.add_argument("--index", type=int, help="log index (default: latest)")
    s.add_argument("--out", help="output path (default: stdout)")
    s.set_defaults(fn=cmd_retrieve)

    s = sub.add_parser("attack", help="run an attack demo and print a JSON verdict")
    s.add_argument("attack", choices=["rogue-key", "infer-s"])
    s.add_argument("--insecure-no-pok", action="store_true")
    s.add_argument("--seed", type=int)
    s.add_argument("--trials", type=int, default=100)
    s.set_defaults(fn=cmd_attack)

    s = sub.add_parser("verify-transcript", help="replay a ledger transcript and check every outcome")
    s.add_argument("file", nargs="?")
    s.set_defaults(fn=cmd_verify_transcript)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PolicyDenied as exc:
        print(f"policy denied: {exc}", file=sys.stderr)
        return EXIT_DENIED
    except (Rejected, CeremonyError, IssuanceRefused) as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except (NotFound, KeyError) as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except TranscriptError as exc:
        print(f"transcript invalid: {exc}", file=sys.stderr)
        return EXIT_TRANSCRIPT


if __name__ == "__main__":
    sys.exit(main())
