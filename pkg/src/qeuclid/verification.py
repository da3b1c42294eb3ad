"""Identity suites over the constructed algebras, aggregated into reports.

Each suite re-runs one layer's defining identities from scratch and
records per-check status, witness, and timing.  Exact mode works over
the rational function field in the half-integer power of the
deformation parameter; eval mode substitutes deterministic rational
sample points and reruns the same checks, which trades certainty for
speed at larger dimension.
"""

from __future__ import annotations

import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from .decoupling import (
    GammaConfig,
    GluingError,
    PhiMap,
    ZetaMap,
    gamma_default,
    solve_gluing,
)
from .linalg import SparseMat, nullspace_rank
from .ncengine import NcPoly
from .presentations import Presentation, get_presentation
from .rmatrix import (
    characteristic_residual,
    metric_residuals,
    projector_residuals,
    projector_trace_values,
    ybe_residual,
)

SUITES = (
    "rmatrix",
    "presentation-consistency",
    "homomorphism-minus",
    "homomorphism-plus",
    "homomorphism-mixed",
    "commutant",
    "counit",
    "factorization",
    "center",
    "injectivity",
)

WITNESS_LIMIT = 320


class UsageError(ValueError):
    """Request malformed before any computation (bad suite, bad mode,
    mixed suite on even dimension, nonpositive sample count)."""


@dataclass
class Check:
    id: str
    status: str  # "pass" or "fail"
    witness: Optional[str]
    millis: int

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "witness": self.witness,
            "millis": self.millis,
        }


@dataclass
class Report:
    suite: str
    N: int
    mode: str
    checks: List[Check]
    summary: Dict[str, int]

    @property
    def ok(self) -> bool:
        return self.summary.get("fail", 0) == 0

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "N": self.N,
            "mode": self.mode,
            "checks": [c.to_json() for c in self.checks],
            "summary": dict(self.summary),
        }

    def lines(self) -> List[str]:
        out = [f"suite={self.suite} N={self.N} mode={self.mode}"]
        for c in self.checks:
            mark = "PASS" if c.status == "pass" else "FAIL"
            line = f"  [{mark}] {c.id} ({c.millis} ms)"
            if c.witness:
                line += f" :: {c.witness}"
            out.append(line)
        out.append(
            f"  summary: {self.summary.get('pass', 0)} passed, "
            f"{self.summary.get('fail', 0)} failed"
        )
        return out


def eval_mode_plan(N: int, samples: int = 5, seed: int = 0) -> List[Fraction]:
    """Deterministic rational sample points in (1, 2) for the half power.

    Points above 1 keep every deformation constant invertible, so no
    per-dimension pole screening is needed; N participates only in the
    contract.  Reproducible from the seed, all points distinct.
    """
    if samples < 1:
        raise UsageError("samples must be at least 1")
    rng = random.Random(seed)
    points: List[Fraction] = []
    while len(points) < samples:
        den = rng.randint(16, 96)
        num = rng.randint(den + 1, 2 * den - 1)
        pt = Fraction(num, den)
        if pt not in points:
            points.append(pt)
    return points


# -- small helpers ---------------------------------------------------------


def _clip(text: str, limit: int = WITNESS_LIMIT) -> str:
    return text if len(text) <= limit else text[: limit - 3] + "..."


def _mat_witness(m: SparseMat, field) -> str:
    items = sorted(m.data.items(), key=lambda kv: str(kv[0]))[:3]
    body = "; ".join(f"{k} -> {field.to_str(v)}" for k, v in items)
    return _clip(f"{len(m.data)} nonzero entries: {body}")

Thunk = Callable[[], Tuple[bool, Optional[str]]]
Item = Tuple[str, Thunk]


def _mat_check(make: Callable[[], SparseMat], field) -> Thunk:
    def run():
        m = make()
        if m.is_zero():
            return True, None
        return False, _mat_witness(m, field)

    return run


def _rows_check(pres: Presentation, mapper, rows) -> Tuple[bool, Optional[str]]:
    bad: List[int] = []
    first = None
    for idx, row in enumerate(rows):
        res = mapper(row)
        if res and not pres.is_zero(res):
            bad.append(idx)
            if first is None:
                first = pres.show(res)
    if not bad:
        return True, None
    return False, _clip(f"rows {bad} do not vanish; first residual: {first}")


def _gamma_for(N: int, field, gamma_json: Optional[dict]) -> GammaConfig:
    if gamma_json is None:
        return gamma_default(N, field)
    return GammaConfig.from_json(gamma_json, field)


def _support(pres: Presentation, family: str) -> List[Tuple[int, int]]:
    labels = pres.rdata.labels
    out = []
    for i in labels:
        for j in labels:
            if pres.lentry(family, i, j):
                out.append((i, j))
    return out


# -- suites -----------------------------------------------------------------


def _suite_rmatrix(N: int, s0: Optional[Fraction], gamma_json) -> List[Item]:
    pres = get_presentation("euclidean", N, s0=s0)
    rd = pres.rdata
    field = rd.field
    items: List[Item] = [
        ("ybe", _mat_check(lambda: ybe_residual(rd), field)),
        ("char-min-poly", _mat_check(lambda: characteristic_residual(rd), field)),
    ]
    for key in sorted(projector_residuals(rd)):
        items.append(
            (
                f"proj-{key.replace('_', '-')}",
                _mat_check(lambda k=key: projector_residuals(rd)[k], field),
            )
        )
    expected = {
        "anti": N * (N - 1) // 2,
        "sym": N * (N + 1) // 2 - 1,
        "trace": 1,
    }

    def trace_thunk(key: str) -> Thunk:
        def run():
            got = projector_trace_values(rd)[key]
            want = field.zero()
            for _ in range(expected[key]):
                want = want + field.one()
            if got == want:
                return True, None
            return False, f"trace is {field.to_str(got)}, expected {expected[key]}"

        return run

    for key in sorted(expected):
        items.append((f"trace-{key}", trace_thunk(key)))

    def metric_thunk(key: str) -> Thunk:
        def run():
            res = metric_residuals(rd)[key]
            if isinstance(res, SparseMat):
                if res.is_zero():
                    return True, None
                return False, _mat_witness(res, field)
            if not res:
                return True, None
            body = "; ".join(f"{k} -> {field.to_str(v)}" for k, v in sorted(res.items())[:3])
            return False, _clip(f"{len(res)} entries off: {body}")

        return run

    for key in sorted(metric_residuals(rd)):
        items.append((f"metric-{key.replace('_', '-')}", metric_thunk(key)))
    return items


def _suite_presentation(N: int, s0: Optional[Fraction], gamma_json) -> List[Item]:
    items: List[Item] = []
    for kind in ("euclidean", "frt", "cross", "extended"):
        def rel_thunk(k=kind):
            pres = get_presentation(k, N, s0=s0)
            bad = pres.check_relations_vanish()
            if not bad:
                return True, None
            return False, _clip(f"relations {bad} do not reduce to zero")

        items.append((f"relations-{kind}", rel_thunk))
    for kind in ("euclidean", "frt", "cross"):
        def ov_thunk(k=kind):
            pres = get_presentation(k, N, s0=s0)
            bad = pres.rules.check_overlaps()
            if not bad:
                return True, None
            return False, _clip(f"{len(bad)} diverging overlap words; first: {bad[0]}")

        items.append((f"overlaps-{kind}", ov_thunk))

    def pp_rank():
        pres = get_presentation("euclidean", N, s0=s0)
        rows = [dict(r) for r in pres.relations["pp"]]
        cols = sorted({w for r in rows for w in r})
        rank = nullspace_rank(rows, cols, pres.field)
        want = N * (N - 1) // 2
        if rank == want:
            return True, None
        return False, f"coordinate relation rank is {rank}, expected {want}"

    items.append(("pp-rank", pp_rank))
    return items


_FAMILY_ROWS = {
    "-": ("rll_mm", "orth_m", "cross_m", "pp"),
    "+": ("rll_pp", "orth_p", "cross_p", "pp"),
}


def _suite_homomorphism(family: str):
    def build(N: int, s0: Optional[Fraction], gamma_json) -> List[Item]:
        pres = get_presentation("extended", N, s0=s0)
        cfg = _gamma_for(N, pres.field, gamma_json)
        phi = PhiMap(pres, cfg, family)
        items: List[Item] = []
        for key in _FAMILY_ROWS[family]:
            items.append(
                (
                    f"rows-{key.replace('_', '-')}",
                    lambda k=key: _rows_check(pres, phi.apply, pres.relations[k]),
                )
            )
        return items

    return build


def _suite_mixed(N: int, s0: Optional[Fraction], gamma_json) -> List[Item]:
    if N % 2 == 0:
        raise UsageError("homomorphism-mixed requires odd dimension")
    pres = get_presentation("extended", N, s0=s0)
    field = pres.field
    state: Dict[str, object] = {}
    lock = threading.Lock()

    def solved():
        # both checks need the solve result and may run in either order
        with lock:
            if "done" not in state:
                try:
                    state["cfg"] = solve_gluing(N, None if s0 is None else field)
                except GluingError as err:
                    state["cfg"] = None
                    state["err"] = err
                state["done"] = True
        return state["cfg"], state.get("err")

    def config_thunk():
        cfg, err = solved()
        if cfg is not None:
            return True, None
        detail = "; ".join(err.residuals[:2])
        return False, _clip(f"{err}: {detail}" if detail else str(err))

    def rows_thunk():
        cfg, err = solved()
        if cfg is None:
            return False, _clip(f"no glued configuration available: {err}")
        glued = PhiMap(pres, cfg, None)
        return _rows_check(pres, glued.apply, pres.relations["rll_pm"])

    return [("gluing-config", config_thunk), ("mixed-rows", rows_thunk)]


def _zeta_support(pres: Presentation, cfg: GammaConfig, family: str):
    zeta = ZetaMap(pres, cfg, family)
    return zeta, _support(pres, family)


def _suite_commutant(N: int, s0: Optional[Fraction], gamma_json) -> List[Item]:
    pres = get_presentation("extended", N, s0=s0)
    cfg = _gamma_for(N, pres.field, gamma_json)
    coords = [g for g in pres.registry.gens if g.kind in ("root", "p")]
    items: List[Item] = []
    for family, name in (("-", "minus"), ("+", "plus")):
        def run(fam=family):
            zeta, pairs = _zeta_support(pres, cfg, fam)
            bad = []
            for (i, j) in pairs:
                z = zeta.entry(i, j)
                for g in coords:
                    a = NcPoly.letter(pres.field, g.rank, 1)
                    if not pres.is_zero(z * a - a * z):
                        bad.append(f"[zeta({i},{j}), {g.name}]")
            if not bad:
                return True, None
            return False, _clip(f"{len(bad)} commutators survive: {bad[:4]}")

        items.append((f"commutant-{name}", run))
    return items


def _suite_counit(N: int, s0: Optional[Fraction], gamma_json) -> List[Item]:
    pres = get_presentation("extended", N, s0=s0)
    cfg = _gamma_for(N, pres.field, gamma_json)
    items: List[Item] = []
    for family, name in (("-", "minus"), ("+", "plus")):
        def run(fam=family):
            zeta, pairs = _zeta_support(pres, cfg, fam)
            bad = []
            for (i, j) in pairs:
                img = zeta.phi.apply(zeta.entry(i, j))
                want = pres.one() if i == j else pres.zero()
                if not pres.is_zero(img - want):
                    bad.append(f"({i},{j}) -> {pres.show(img)}")
            if not bad:
                return True, None
            return False, _clip(f"{len(bad)} entries off the unit matrix: {bad[:3]}")

        items.append((f"counit-{name}", run))
    return items


def _suite_factorization(N: int, s0: Optional[Fraction], gamma_json) -> List[Item]:
    pres = get_presentation("extended", N, s0=s0)
    cfg = _gamma_for(N, pres.field, gamma_json)
    labels = pres.rdata.labels
    items: List[Item] = []
    for family, name in (("-", "minus"), ("+", "plus")):
        def run(fam=family):
            zeta, pairs = _zeta_support(pres, cfg, fam)
            bad = []
            for (i, j) in pairs:
                acc = pres.zero()
                for h in labels:
                    if not pres.lentry(fam, i, h) or not pres.lentry(fam, h, j):
                        continue
                    acc = acc + pres.nf(zeta.entry(i, h) * zeta.phi.apply(pres.lentry(fam, h, j)))
                if not pres.is_zero(pres.lentry(fam, i, j) - acc):
                    bad.append(f"({i},{j})")
            if not bad:
                return True, None
            return False, _clip(f"entries {bad} do not factor through zeta and phi")

        items.append((f"factorization-{name}", run))
    return items


def _band_words(pres: Presentation, family: str) -> List[tuple]:
    """Normal words of degree at most two in the triangular letters of
    one family (diagonal letters included), positive exponents only.

    At even dimension the two innermost diagonal letters belong to the
    extended coordinate algebra, where the decoupling maps send them to
    scalars; they cannot carry independent images and are left out.
    Letters that reduce to zero (the inner antidiagonal band entries
    collapse at even dimension) are not basis elements and are skipped.
    """
    cartan_in_coords = (1, -1) if pres.N % 2 == 0 else ()
    one = pres.field.one()
    letters = [
        g.rank
        for g in pres.registry.gens
        if ((g.kind == "diag" and g.index[0] not in cartan_in_coords)
            or g.kind == f"L{family}")
        and pres.nf(NcPoly(pres.field, {((g.rank, 1),): one})).terms
        == {((g.rank, 1),): one}
    ]
    words: List[tuple] = [()]
    for r in letters:
        words.append(((r, 1),))
    for pos, a in enumerate(letters):
        for b in letters[pos:]:
            w = ((a, 2),) if a == b else ((a, 1), (b, 1))
            if pres.nf(NcPoly(pres.field, {w: one})).terms == {w: one}:
                words.append(w)
    return words


def _suite_injectivity(N: int, s0: Optional[Fraction], gamma_json) -> List[Item]:
    pres = get_presentation("extended", N, s0=s0)
    cfg = _gamma_for(N, pres.field, gamma_json)
    reg = pres.registry
    field = pres.field
    items: List[Item] = []
    for family, name in (("-", "minus"), ("+", "plus")):
        def run(fam=family):
            zeta = ZetaMap(pres, cfg, fam)

            def letter_image(rank: int) -> NcPoly:
                g = reg.gens[rank]
                if g.kind == "diag":
                    k = g.index[0]
                    return zeta.entry(k, k) if fam == "+" else zeta.entry(-k, -k)
                i, j = g.index
                return zeta.entry(i, j)

            words = _band_words(pres, fam)
            images = []
            for w in words:
                cur = pres.one()
                for rank, e in w:
                    img = letter_image(rank)
                    for _ in range(e):
                        cur = pres.nf(cur * img, degree_cap=256)
                images.append(cur)
            # clear inverse scaling letters on the right with one shared
            # monomial so the coefficient rows compare linearly; crossing
            # roots past band letters can reintroduce inverses of another
            # root, so retry on the residue a bounded number of times
            rows = [dict(poly.terms) for poly in images]
            for _ in range(4):
                clear: Dict[int, int] = {}
                for row in rows:
                    for w in row:
                        for rank, e in w:
                            if e < 0 and reg.is_invertible(rank) and not reg.is_lband(rank):
                                clear[rank] = max(clear.get(rank, 0), -e)
                if not clear:
                    break
                mword = pres.one()
                for rank, e in sorted(clear.items()):
                    mword = mword * NcPoly.letter(field, rank, e)
                rows = [
                    dict(pres.nf(NcPoly(field, row) * mword, degree_cap=512).terms)
                    for row in rows
                ]
            leftover = sorted(
                {reg.gens[rank].name for row in rows for w in row for rank, e in w if e < 0}
            )
            if leftover:
                return False, _clip(f"rank rows keep inverse letters {leftover}")
            cols = sorted({w for r in rows for w in r})
            rank = nullspace_rank(rows, cols, field)
            if rank == len(words):
                return True, None
            return False, f"rank {rank} over {len(words)} degree-<=2 words"

        items.append((f"injectivity-{name}", run))
    return items


def _suite_center(N: int, s0: Optional[Fraction], gamma_json) -> List[Item]:
    pres = get_presentation("extended", N, s0=s0)
    n = N // 2

    def run():
        p2 = pres.poly(f"sqrtP[{n}]", 4)
        bad = []
        for g in pres.registry.gens:
            if g.kind not in ("root", "p"):
                continue
            a = NcPoly.letter(pres.field, g.rank, 1)
            if not pres.is_zero(p2 * a - a * p2):
                bad.append(g.name)
        if not bad:
            return True, None
        return False, _clip(f"invariant square fails to commute with {bad}")

    return [("center", run)]


_SUITE_BUILDERS: Dict[str, Callable[[int, Optional[Fraction], Optional[dict]], List[Item]]] = {
    "rmatrix": _suite_rmatrix,
    "presentation-consistency": _suite_presentation,
    "homomorphism-minus": _suite_homomorphism("-"),
    "homomorphism-plus": _suite_homomorphism("+"),
    "homomorphism-mixed": _suite_mixed,
    "commutant": _suite_commutant,
    "counit": _suite_counit,
    "factorization": _suite_factorization,
    "center": _suite_center,
    "injectivity": _suite_injectivity,
}


# -- the runner --------------------------------------------------------------


def _worker_cap() -> int:
    raw = os.environ.get("QEUCLID_WORKERS", "")
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise UsageError(f"QEUCLID_WORKERS must be an integer, got {raw!r}")
        return max(1, cap)
    return min(4, os.cpu_count() or 1)


def _run_one(item: Item) -> Check:
    cid, thunk = item
    t0 = time.perf_counter()
    ok, witness = thunk()
    millis = int((time.perf_counter() - t0) * 1000)
    return Check(cid, "pass" if ok else "fail", witness, millis)


def _run_items(items: List[Item]) -> List[Check]:
    cap = _worker_cap()
    if cap <= 1 or len(items) <= 1:
        return [_run_one(it) for it in items]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(_run_one, items))


def _suite_names(suite: str, N: int) -> List[str]:
    if suite == "all":
        names = [s for s in SUITES if s != "homomorphism-mixed" or N % 2]
        return names
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}")
    return [suite]


def _merge_eval(per_sample: List[Tuple[Fraction, List[Check]]]) -> List[Check]:
    merged: Dict[str, Check] = {}
    for s0, checks in per_sample:
        for c in checks:
            cur = merged.get(c.id)
            if cur is None:
                witness = f"s0={s0}: {c.witness}" if c.witness else None
                merged[c.id] = Check(c.id, c.status, witness, c.millis)
                continue
            cur.millis += c.millis
            if c.status == "fail" and cur.status == "pass":
                cur.status = "fail"
                cur.witness = f"s0={s0}: {c.witness}" if c.witness else f"s0={s0}"
    return [merged[k] for k in merged]


def verify(
    suite: str,
    N: int,
    mode: str = "exact",
    *,
    samples: int = 5,
    seed: int = 0,
    gamma: Optional[dict] = None,
) -> Report:
    """Run one named identity suite (or all of them) and report.

    gamma, when given, is the parsed JSON form of a GammaConfig and
    replaces the default scaling constants in every suite that uses
    them.  Eval mode reruns the suite at each planned sample point; a
    check passes only if it passes at every point.
    """
    if N < 3:
        raise UsageError("dimension must be at least 3")
    names = _suite_names(suite, N)
    if mode == "exact":
        mode_str = "exact"
        checks: List[Check] = []
        for name in names:
            items = _SUITE_BUILDERS[name](N, None, gamma)
            got = _run_items(items)
            if suite == "all":
                for c in got:
                    c.id = f"{name}/{c.id}"
            checks.extend(got)
    elif mode == "eval":
        plan = eval_mode_plan(N, samples, seed)
        mode_str = f"eval(samples={samples}, seed={seed})"
        checks = []
        for name in names:
            per_sample = []
            for s0 in plan:
                items = _SUITE_BUILDERS[name](N, s0, gamma)
                per_sample.append((s0, _run_items(items)))
            got = _merge_eval(per_sample)
            if suite == "all":
                for c in got:
                    c.id = f"{name}/{c.id}"
            checks.extend(got)
    else:
        raise UsageError(f"unknown mode {mode!r}")
    checks.sort(key=lambda c: c.id)
    summary = {
        "pass": sum(1 for c in checks if c.status == "pass"),
        "fail": sum(1 for c in checks if c.status == "fail"),
        "total": len(checks),
    }
    return Report(suite, N, mode_str, checks, summary)
