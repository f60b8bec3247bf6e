"""``sipauth`` command-line entry point.

Exit codes: 0 success, 1 protocol rejection (or an attack that found
nothing), 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import secrets
import sys
import time
from pathlib import Path

from . import adversary, bench, netharness, prims, selftest
from .config import Config, load_config, parse_kv_file
from .ecc import load_profile
from .errors import NoMatch, ProtocolError, SipAuthError
from .prims import decode_point, encode_point
from .schemes import SCHEMES, load_database, new_database, register_user
from .schemes.common import Credentials, PublicParams, ServerKeys

EXIT_OK, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--curve", dest="curve_profile", help="TOY-17, STD-256 or a profile .conf path")
    common.add_argument("--window-ms", dest="freshness_window_ms", type=int)
    common.add_argument("--realm")
    common.add_argument("--db", dest="db_path", help="database path; '{scheme}' is substituted")
    common.add_argument("--key-file", dest="server_key_path")
    common.add_argument("--transcripts", dest="transcript_path")
    common.add_argument("--bind", dest="bind_address", help="host:port")
    common.add_argument("--hash", dest="hash_name")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sipauth", description="ECC SIP authentication laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    schemes = sorted(SCHEMES)

    p = sub.add_parser("register", parents=[common], help="register a user in the server database")
    p.add_argument("--scheme", required=True, choices=schemes)
    p.add_argument("--id", required=True)
    p.add_argument("--pw", required=True)

    p = sub.add_parser("login", parents=[common], help="run one in-process login and log its transcript")
    p.add_argument("--scheme", required=True, choices=schemes)
    p.add_argument("--id", required=True)
    p.add_argument("--pw", required=True)
    p.add_argument("--leak", action="store_true", help="print the user's ephemeral r_u (session exposure)")

    p = sub.add_parser("serve", parents=[common], help="serve logins over TCP")
    p.add_argument("--scheme", required=True, choices=schemes)
    p.add_argument("--duration", type=float, help="stop after this many seconds")

    p = sub.add_parser("connect", parents=[common], help="log in to a running server and send an alert")
    p.add_argument("--scheme", required=True, choices=schemes)
    p.add_argument("--id", required=True)
    p.add_argument("--pw", required=True)
    p.add_argument("--message", default="EMERGENCY: patient vitals critical")

    p = sub.add_parser("attack", parents=[common], help="offline guessing with a leaked r_u")
    p.add_argument("--scheme", required=True, choices=schemes)
    p.add_argument("--transcript", required=True, help="transcript log file")
    p.add_argument("--leak-ru", required=True, help="leaked ephemeral r_u, hex")
    p.add_argument("--id-dict", help="identity dictionary, one per line")
    p.add_argument("--pw-dict", required=True, help="password dictionary, one per line")

    p = sub.add_parser("bench", parents=[common], help="reproduce the computation-cost table")
    p.add_argument("--iterations", type=int, default=5, help="timed sessions per scheme (0 to skip)")
    p.add_argument("--measure-curve", default="STD-256")
    p.add_argument("--csv", help="also write the table as CSV to this path")

    sub.add_parser("selftest", parents=[common], help="run the TOY-17 invariant suite")
    return parser


def _config(args) -> Config:
    cfg = load_config(args.config)
    overrides = {
        key: getattr(args, key, None)
        for key in ("curve_profile", "freshness_window_ms", "realm", "db_path", "server_key_path",
                    "transcript_path", "bind_address", "hash_name")
    }
    cfg = cfg.updated(**overrides)
    prims.use_hash(cfg.hash_name)
    return cfg


def _public_path(cfg: Config) -> Path:
    return Path(f"{cfg.server_key_path}.pub")


def _server_keys(cfg: Config, create: bool) -> ServerKeys:
    curve = load_profile(cfg.curve_profile)
    path = Path(cfg.server_key_path)
    if path.exists():
        return ServerKeys.load(path, curve)
    if not create:
        raise UsageError(f"server key file {path} not found; register a user first")
    keys = ServerKeys.generate(curve, secrets.SystemRandom())
    keys.save(path)
    _public_path(cfg).write_text(
        f"profile = {curve.profile_name}\nq_s = {encode_point(keys.q_s, curve).hex()}\n", encoding="ascii"
    )
    return keys


def _public_params(cfg: Config) -> PublicParams:
    path = _public_path(cfg)
    if not path.exists():
        raise UsageError(f"public parameter file {path} not found")
    values = parse_kv_file(path.read_text(encoding="ascii"))
    curve = load_profile(values["profile"])
    return PublicParams(curve, decode_point(bytes.fromhex(values["q_s"]), curve), cfg.realm.encode())


def _database(cfg: Config, scheme: str, must_exist: bool = False):
    path = cfg.db_file(scheme)
    if path.exists():
        return load_database(scheme, path, cfg.freshness_window_ms), path
    if must_exist:
        raise UsageError(f"database {path} not found; register a user first")
    return new_database(scheme, cfg.freshness_window_ms), path


def cmd_register(args, cfg: Config, out) -> int:
    keys = _server_keys(cfg, create=True)
    db, path = _database(cfg, args.scheme)
    register_user(args.scheme, db, Credentials(args.id, args.pw), keys, secrets.SystemRandom())
    db.save(path)
    out(f"registered {args.id!r} for {args.scheme} in {path}")
    return EXIT_OK


def cmd_login(args, cfg: Config, out) -> int:
    keys = _server_keys(cfg, create=False)
    db, path = _database(cfg, args.scheme, must_exist=True)
    outcome = netharness.run_session(
        args.scheme, Credentials(args.id, args.pw), db, keys,
        realm=cfg.realm.encode(), window_ms=cfg.freshness_window_ms,
    )
    if len(outcome.frames) == 3:
        transcript = netharness.record_transcripts(outcome, session_id=netharness.next_session_id(cfg.transcript_path))
        netharness.write_transcript_log(cfg.transcript_path, [transcript])
    if args.leak and outcome.r_u is not None:
        out(f"leaked r_u: {outcome.r_u:x}")
    if not outcome.agreed:
        out(f"login {outcome.status}")
        return EXIT_REJECTED
    out(f"login keys-agree sk_fp={netharness.fingerprint(outcome.user_key)}")
    return EXIT_OK


def cmd_serve(args, cfg: Config, out) -> int:
    keys = _server_keys(cfg, create=False)
    db, _ = _database(cfg, args.scheme, must_exist=True)
    server = netharness.serve(cfg.bind(), db, args.scheme, keys,
                              realm=cfg.realm.encode(), window_ms=cfg.freshness_window_ms)
    host, port = server.address
    out(f"serving {args.scheme} on {host}:{port}")
    try:
        if args.duration is not None:
            time.sleep(args.duration)
        else:
            while True:
                time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return EXIT_OK


def cmd_connect(args, cfg: Config, out) -> int:
    params = _public_params(cfg)
    try:
        result = netharness.connect(cfg.bind(), Credentials(args.id, args.pw), args.scheme, params,
                                    alert=args.message.encode(), window_ms=cfg.freshness_window_ms)
    except ProtocolError as exc:
        out(f"rejected: {type(exc).__name__}")
        return EXIT_REJECTED
    out(f"connected sk_fp={result.fingerprint} ack={result.ack.decode(errors='replace')}")
    return EXIT_OK


def cmd_attack(args, cfg: Config, out) -> int:
    transcripts = [t for t in netharness.read_transcript_log(args.transcript) if t.scheme_id == args.scheme]
    r_u = int(args.leak_ru, 16)
    try:
        target = adversary.match_session(transcripts, r_u).with_leak(r_u=r_u)
    except NoMatch as exc:
        out(f"no match: {exc}")
        return EXIT_REJECTED
    pw_dict = adversary.Dictionary.from_file(args.pw_dict, "password")
    id_dict = adversary.Dictionary.from_file(args.id_dict, "identity") if args.id_dict else None
    if id_dict is None and args.scheme != "zhang":
        raise UsageError(f"--id-dict is required for {args.scheme}")
    report = adversary.run_attack(target, r_u, id_dict, pw_dict)
    out(report.to_record())
    return EXIT_OK if report.success else EXIT_REJECTED


def cmd_bench(args, cfg: Config, out) -> int:
    model = bench.CostModel(cfg.t_pm, cfg.t_h)
    curve = args.measure_curve if args.iterations else None
    report = bench.static_table(model, curve=curve, iterations=args.iterations)
    out(report.format_text())
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    return EXIT_OK


def cmd_selftest(args, cfg: Config, out) -> int:
    return EXIT_OK if selftest.run(out) else EXIT_REJECTED


COMMANDS = {
    "register": cmd_register,
    "login": cmd_login,
    "serve": cmd_serve,
    "connect": cmd_connect,
    "attack": cmd_attack,
    "bench": cmd_bench,
    "selftest": cmd_selftest,
}


def main(argv: list[str] | None = None, out=print) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg, out)
    except ProtocolError as exc:
        print(f"sipauth: rejected: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except (UsageError, ValueError, OSError) as exc:
        print(f"sipauth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SipAuthError as exc:
        print(f"sipauth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
