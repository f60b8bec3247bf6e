"""Operation counts, cost-model estimates and wall-clock timings.

Counting convention: one point multiplication per ``scalar_mult`` call and one
hash per ``hash_parts`` call, attributed to whichever side executed it, login
phase only. XOR, comparisons and encodings are not counted. Where our counts
disagree with the published table the report flags the row instead of
adjusting either number.
"""

from __future__ import annotations

import csv
import io
import random
import statistics
import time
from dataclasses import dataclass, field

from .counting import OpCounter, counting
from .ecc import CurveParams, load_profile
from .endpoints import ServerEndpoint, UserEndpoint
from .prims import ManualClock, hash_parts
from .schemes import enhanced, new_database, register_user, sureshkumar, zhang
from .schemes.common import Credentials, ServerKeys


@dataclass(frozen=True)
class SideCounts:
    point_mults: int = 0
    hashes: int = 0

    def __post_init__(self) -> None:
        if self.point_mults < 0 or self.hashes < 0:
            raise ValueError("operation counts are non-negative")

    def __add__(self, other: "SideCounts") -> "SideCounts":
        return SideCounts(self.point_mults + other.point_mults, self.hashes + other.hashes)

    def __str__(self) -> str:
        return f"{self.point_mults}T_pm+{self.hashes}T_h"


@dataclass(frozen=True)
class OpCounts:
    user: SideCounts
    server: SideCounts

    @property
    def total(self) -> SideCounts:
        return self.user + self.server


@dataclass(frozen=True)
class CostModel:
    """Seconds per operation; defaults are the published unit costs."""

    t_pm: float = 0.0171
    t_h: float = 0.00032

    def __post_init__(self) -> None:
        if self.t_pm <= 0 or self.t_h <= 0:
            raise ValueError("unit costs must be positive")


def estimate_runtime(counts: OpCounts | SideCounts, model: CostModel = CostModel()) -> float:
    if isinstance(counts, OpCounts):
        counts = counts.total
    return counts.point_mults * model.t_pm + counts.hashes * model.t_h


@dataclass(frozen=True)
class PublishedRow:
    scheme: str
    user: SideCounts
    server: SideCounts
    running_time: float
    scheme_id: str | None = None

    @property
    def counts(self) -> OpCounts:
        return OpCounts(self.user, self.server)


PUBLISHED_TABLE = (
    PublishedRow("Lu et al. (2017)", SideCounts(3, 8), SideCounts(3, 7), 0.1074),
    PublishedRow("Chaudhry et al.", SideCounts(3, 5), SideCounts(3, 5), 0.1058),
    PublishedRow("Tu et al.", SideCounts(3, 5), SideCounts(3, 5), 0.1058),
    PublishedRow("Farash", SideCounts(4, 5), SideCounts(3, 5), 0.1229),
    PublishedRow("Lu et al. (2016)", SideCounts(2, 4), SideCounts(2, 5), 0.07128),
    PublishedRow("Arshad et al.", SideCounts(2, 4), SideCounts(2, 4), 0.07096),
    PublishedRow("Zhang et al.", SideCounts(3, 4), SideCounts(3, 5), 0.10548, zhang.SCHEME_ID),
    PublishedRow("Sureshkumar et al.", SideCounts(3, 7), SideCounts(3, 5), 0.10644, sureshkumar.SCHEME_ID),
    PublishedRow("Ours", SideCounts(3, 6), SideCounts(3, 5), 0.10612, enhanced.SCHEME_ID),
)


def published_row(scheme_id: str) -> PublishedRow:
    for row in PUBLISHED_TABLE:
        if row.scheme_id == scheme_id:
            return row
    raise KeyError(scheme_id)


def _honest_setup(scheme_id: str, curve: CurveParams, seed: int):
    rng = random.Random(seed)
    server = ServerKeys.generate(curve, rng)
    db = new_database(scheme_id)
    creds = Credentials(b"alice@hospital.example", b"hunter2")
    register_user(scheme_id, db, creds, server, rng)
    return rng, server, db, creds


def _endpoints(scheme_id, creds, server, db, rng, clock):
    hid_u = hash_parts(creds.id_u) if scheme_id == enhanced.SCHEME_ID else None
    user = UserEndpoint(scheme_id, creds, server.public(), clock, rng, hid_u=hid_u)
    srv = ServerEndpoint(scheme_id, db, server, clock, rng)
    return user, srv


def count_ops(scheme_id: str, curve: CurveParams | None = None, seed: int = 0) -> OpCounts:
    """Run one instrumented honest login and count operations per side."""
    curve = curve or load_profile("TOY-17")
    rng, server, db, creds = _honest_setup(scheme_id, curve, seed)
    user, srv = _endpoints(scheme_id, creds, server, db, rng, ManualClock())
    u, s = OpCounter(), OpCounter()
    with counting(u):
        m1 = user.start()
    with counting(s):
        m2 = srv.on_m1(m1)
    with counting(u):
        m3 = user.on_m2(m2)
    with counting(s):
        srv.on_m3(m3)
    if user.session_key != srv.session_key:
        raise RuntimeError("instrumented session did not agree on a key")
    return OpCounts(SideCounts(u.point_mults, u.hashes), SideCounts(s.point_mults, s.hashes))


@dataclass(frozen=True)
class RuntimeMeasurement:
    user: float
    server: float
    total: float
    minimum: float
    iterations: int


def measure_runtime(scheme_id: str, curve: CurveParams | str, iterations: int = 10, seed: int = 0) -> RuntimeMeasurement:
    """Median wall-clock seconds of an honest login, per side and in total."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if isinstance(curve, str):
        curve = load_profile(curve)
    rng, server, db, creds = _honest_setup(scheme_id, curve, seed)
    clock = ManualClock()
    users, servers, totals = [], [], []
    for _ in range(iterations):
        user, srv = _endpoints(scheme_id, creds, server, db, rng, clock)
        t0 = time.perf_counter()
        m1 = user.start()
        t1 = time.perf_counter()
        m2 = srv.on_m1(m1)
        t2 = time.perf_counter()
        m3 = user.on_m2(m2)
        t3 = time.perf_counter()
        srv.on_m3(m3)
        t4 = time.perf_counter()
        users.append((t1 - t0) + (t3 - t2))
        servers.append((t2 - t1) + (t4 - t3))
        totals.append(t4 - t0)
        clock.advance(1)  # keeps (R_u, t_u) distinct for the replay cache
    return RuntimeMeasurement(
        statistics.median(users), statistics.median(servers), statistics.median(totals), min(totals), iterations
    )


@dataclass
class ReportRow:
    published: PublishedRow
    estimate: float
    measured: OpCounts | None = None
    measured_runtime: RuntimeMeasurement | None = None

    @property
    def flags(self) -> list[str]:
        if self.measured is None:
            return []
        out = []
        for side in ("user", "server"):
            ours, theirs = getattr(self.measured, side), getattr(self.published, side)
            if ours.point_mults != theirs.point_mults:
                out.append(f"{side} pm {ours.point_mults} != {theirs.point_mults}")
            if ours.hashes != theirs.hashes:
                out.append(f"{side} h {ours.hashes} != {theirs.hashes}")
        return out


@dataclass
class OpCountReport:
    model: CostModel
    rows: list[ReportRow] = field(default_factory=list)

    def row(self, scheme: str) -> ReportRow:
        for r in self.rows:
            if r.published.scheme == scheme or r.published.scheme_id == scheme:
                return r
        raise KeyError(scheme)

    def format_text(self) -> str:
        header = ["Scheme", "User U", "Server S", "Total overhead", "Running Time",
                  "Measured U", "Measured S", "Measured s", "Flags"]
        body = []
        for r in self.rows:
            p = r.published
            body.append([
                p.scheme, str(p.user), str(p.server), str(p.counts.total), f"{r.estimate:.5f} sec",
                str(r.measured.user) if r.measured else "-",
                str(r.measured.server) if r.measured else "-",
                f"{r.measured_runtime.total:.5f}" if r.measured_runtime else "-",
                "; ".join(r.flags) or "-",
            ])
        widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
        lines = [" | ".join(c.ljust(w) for c, w in zip(header, widths))]
        lines.append("-+-".join("-" * w for w in widths))
        lines += [" | ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
        lines.append(f"cost model: T_pm = {self.model.t_pm} s, T_h = {self.model.t_h} s")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scheme", "user_pm", "user_h", "server_pm", "server_h", "estimate_s", "measured_s",
                         "published_user_h", "published_server_h", "flags"])
        for r in self.rows:
            p = r.published
            counts = r.measured or p.counts
            writer.writerow([
                p.scheme, counts.user.point_mults, counts.user.hashes, counts.server.point_mults,
                counts.server.hashes, f"{r.estimate:.5f}",
                f"{r.measured_runtime.total:.6f}" if r.measured_runtime else "",
                p.user.hashes, p.server.hashes, "; ".join(r.flags),
            ])
        return buf.getvalue()


def static_table(
    model: CostModel = CostModel(),
    curve: CurveParams | str | None = None,
    iterations: int = 0,
) -> OpCountReport:
    """The published comparison, with our counts (and timings, if requested) alongside.

    Estimates are always computed from each row's published coefficients.
    """
    if isinstance(curve, str):
        curve = load_profile(curve)
    report = OpCountReport(model)
    for p in PUBLISHED_TABLE:
        row = ReportRow(p, estimate_runtime(p.counts, model))
        if p.scheme_id is not None:
            row.measured = count_ops(p.scheme_id, curve)
            if iterations:
                row.measured_runtime = measure_runtime(p.scheme_id, curve or load_profile("STD-256"), iterations)
        report.rows.append(row)
    return report
